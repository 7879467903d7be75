// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <set>

#include "helpers.hpp"
#include "medforge/backends/mock.hpp"
#include "medforge/common/digest.hpp"
#include "medforge/store/jsonl.hpp"
#include "medforge/store/sampling.hpp"
#include "medforge/store/stats.hpp"

using namespace medforge;
using namespace medforge::store;
using nlohmann::json;

namespace {

responses::SftSample labeled_sample(const std::string& id, const std::string& primary,
                                    const std::string& secondary,
                                    responses::SampleStyle style = responses::SampleStyle::ordinary) {
    responses::SftSample s;
    s.id = id;
    s.instruction = "Q " + id;
    s.response = "A " + id;
    s.style = style;
    s.score = {7, 5, 5, false};
    s.primary_dept = primary;
    s.secondary_dept = secondary;
    s.text_id = id;
    if (style == responses::SampleStyle::ordinary) {
        s.reward_margin = 0.25;
    }
    return s;
}

}  // namespace

TEST_CASE("jsonl round trip with manifest verification") {
    test::TempDir dir("jsonl");
    std::string path = dir.str("data.jsonl");

    std::vector<json> rows{{{"id", "a"}, {"v", 1}}, {{"id", "b"}, {"v", 2}}};
    write_dataset(path, rows, "raw", {"deadbeef"}, 7);

    auto m = read_manifest(path);
    CHECK(m.kind == "raw");
    CHECK(m.count == 2);
    CHECK(m.path == "data.jsonl");
    CHECK(m.created_from == std::vector<std::string>{"deadbeef"});
    REQUIRE(m.seed.has_value());
    CHECK(*m.seed == 7);

    auto loaded = open_dataset(path);
    CHECK(loaded == rows);

    // tamper: append a line -> manifest mismatch on open
    {
        std::ofstream app(path, std::ios::app);
        app << R"({"id":"c","v":3})" << "\n";
    }
    CHECK_THROWS_AS(open_dataset(path), ManifestMismatch);
}

TEST_CASE("reservoir sampling") {
    std::vector<int> small{1, 2, 3, 4, 5};

    SUBCASE("n larger than the stream returns everything") {
        auto got = reservoir_sample(small, 10, 1);
        CHECK(got.size() == 5);
        std::sort(got.begin(), got.end());
        CHECK(got == small);
    }

    SUBCASE("same seed, same sample") {
        std::vector<int> big;
        for (int i = 0; i < 10000; ++i) {
            big.push_back(i);
        }
        auto a = reservoir_sample(big, 100, 42);
        auto b = reservoir_sample(big, 100, 42);
        CHECK(a == b);
        CHECK(a.size() == 100);
        CHECK(reservoir_sample(big, 100, 43) != a);
    }

    SUBCASE("uniformity: 10,000 single draws from 4 items stay within 2500 +/- 150") {
        std::vector<int> items{0, 1, 2, 3};
        int counts[4] = {0, 0, 0, 0};
        for (int trial = 0; trial < 10000; ++trial) {
            auto got = reservoir_sample(items, 1, derive_seed(1000, "trial",
                                                              static_cast<std::uint64_t>(trial)));
            REQUIRE(got.size() == 1);
            ++counts[got[0]];
        }
        for (int c : counts) {
            CHECK(c >= 2350);
            CHECK(c <= 2650);
        }
    }
}

TEST_CASE("stage splits") {
    // Construct a pool with generous department coverage.
    std::vector<responses::SftSample> pool;
    int serial = 0;
    auto add = [&](const std::string& primary, const std::string& secondary, int n) {
        for (int i = 0; i < n; ++i) {
            pool.push_back(labeled_sample("s" + std::to_string(10000 + serial++), primary, secondary));
        }
    };
    add("Internal Medicine", "Endocrinology", 40);
    add("Internal Medicine", "Cardiology", 40);
    add("Surgery", "Urology", 60);
    add("Pediatrics", "Pediatric Surgery", 60);
    add("Other Departments", "Anesthesiology", 100);

    StagePlan plan;
    plan.seed = 11;
    plan.stages = {{parse_selector("whole"), 200},
                   {parse_selector("primary_dept=Internal Medicine"), 36},
                   {parse_selector("secondary_dept=Endocrinology"), 11}};

    SUBCASE("independent mode: exact paper-proportioned counts") {
        auto splits = build_stage_splits(pool, plan);
        REQUIRE(splits.size() == 3);
        CHECK(splits[0].size() == 200);
        CHECK(splits[1].size() == 36);
        CHECK(splits[2].size() == 11);
        for (const auto& s : splits[1]) {
            CHECK(s.primary_dept == "Internal Medicine");
        }
        for (const auto& s : splits[2]) {
            CHECK(s.secondary_dept == "Endocrinology");
        }
        // each stage alone is duplicate-free
        for (const auto& stage : splits) {
            std::set<std::string> ids;
            for (const auto& s : stage) {
                ids.insert(s.id);
            }
            CHECK(ids.size() == stage.size());
        }
    }

    SUBCASE("reversed plan keeps counts, reverses order") {
        StagePlan reversed = plan;
        std::reverse(reversed.stages.begin(), reversed.stages.end());
        auto splits = build_stage_splits(pool, reversed);
        REQUIRE(splits.size() == 3);
        CHECK(splits[0].size() == 11);
        CHECK(splits[1].size() == 36);
        CHECK(splits[2].size() == 200);
    }

    SUBCASE("disjoint mode: stages never share ids") {
        StagePlan disjoint = plan;
        disjoint.overlap = Overlap::disjoint;
        disjoint.stages = {{parse_selector("secondary_dept=Endocrinology"), 11},
                           {parse_selector("primary_dept=Internal Medicine"), 36},
                           {parse_selector("whole"), 200}};
        auto splits = build_stage_splits(pool, disjoint);
        std::set<std::string> seen;
        size_t total = 0;
        for (const auto& stage : splits) {
            for (const auto& s : stage) {
                seen.insert(s.id);
                ++total;
            }
        }
        CHECK(seen.size() == total);
    }

    SUBCASE("disjoint pool exhaustion raises InsufficientPool") {
        StagePlan starved;
        starved.seed = 3;
        starved.overlap = Overlap::disjoint;
        starved.stages = {{parse_selector("secondary_dept=Endocrinology"), 40},
                          {parse_selector("secondary_dept=Endocrinology"), 1}};
        CHECK_THROWS_AS(build_stage_splits(pool, starved), InsufficientPool);
    }

    SUBCASE("selector validation") {
        CHECK_THROWS_AS(parse_selector("primary_dept=Podiatry"), ConfigError);
        CHECK_THROWS_AS(parse_selector("secondary_dept=Nonexistent"), ConfigError);
        CHECK_THROWS_AS(parse_selector("bogus"), ConfigError);
        StagePlan bad;
        bad.stages = {{parse_selector("whole"), 0}};
        CHECK_THROWS_AS(bad.validate(), ConfigError);
    }
}

TEST_CASE("reasoning split for sft/dpo halves") {
    auto build = [](int n) {
        std::vector<responses::SftSample> v;
        for (int i = 0; i < n; ++i) {
            v.push_back(labeled_sample("r" + std::to_string(100 + i), "Internal Medicine",
                                       "Endocrinology", responses::SampleStyle::reasoning));
        }
        return v;
    };

    SUBCASE("34 -> 17/17") {
        auto [sft, dpo] = split_reasoning_for_sft_and_dpo(build(34), 0.5, 9);
        CHECK(sft.size() == 17);
        CHECK(dpo.size() == 17);
    }
    SUBCASE("33 -> 17/16 (round half up)") {
        auto [sft, dpo] = split_reasoning_for_sft_and_dpo(build(33), 0.5, 9);
        CHECK(sft.size() == 17);
        CHECK(dpo.size() == 16);
    }
    SUBCASE("deterministic and disjoint") {
        auto a = split_reasoning_for_sft_and_dpo(build(33), 0.5, 9);
        auto b = split_reasoning_for_sft_and_dpo(build(33), 0.5, 9);
        for (size_t i = 0; i < a.first.size(); ++i) {
            CHECK(a.first[i].id == b.first[i].id);
        }
        std::set<std::string> ids;
        for (const auto& s : a.first) {
            ids.insert(s.id);
        }
        for (const auto& s : a.second) {
            CHECK(ids.count(s.id) == 0);
        }
        CHECK_THROWS_AS(split_reasoning_for_sft_and_dpo(build(10), 0.0, 9), ConfigError);
    }
}

TEST_CASE("score_stats") {
    SUBCASE("hand-computed example") {
        std::vector<json> rows{{{"quality", 9}}, {{"quality", 9}}, {{"quality", 7}}, {{"quality", 5}}};
        auto stats = score_stats(rows, {"quality"});
        const auto& q = stats.axes.at("quality");
        CHECK(q.mean == doctest::Approx(7.5));
        CHECK(q.median == 7);  // lower-middle of {5,7,9,9}
        CHECK(q.histogram.at(5) == 1);
        CHECK(q.histogram.at(7) == 1);
        CHECK(q.histogram.at(9) == 2);
        CHECK(q.histogram.at(1) == 0);  // full axis range materialized
        std::int64_t bucket_sum = 0;
        for (const auto& [b, c] : q.histogram) {
            bucket_sum += c;
        }
        CHECK(bucket_sum == stats.n);
    }

    SUBCASE("errors") {
        CHECK_THROWS_AS(score_stats({}, {"quality"}), EmptyDataset);
        std::vector<json> rows{{{"quality", 5}}, {{"other", 1}}};
        CHECK_THROWS_AS(score_stats(rows, {"quality"}), MissingAxis);
    }

    SUBCASE("5000-row oracle: naive reference agrees exactly") {
        DetRng gen(77);
        std::vector<json> rows;
        for (int i = 0; i < 5000; ++i) {
            rows.push_back({{"quality", static_cast<int>(gen.below(10)) + 1},
                            {"difficulty", static_cast<int>(gen.below(10)) + 1},
                            {"relevance", static_cast<int>(gen.below(6)) + 1}});
        }
        auto stats = score_stats(rows, {"quality", "difficulty", "relevance"});

        for (const char* axis : {"quality", "difficulty", "relevance"}) {
            // independent naive reference
            std::vector<int> values;
            for (const auto& row : rows) {
                values.push_back(row[axis].get<int>());
            }
            std::sort(values.begin(), values.end());
            long long sum = 0;
            std::map<int, long long> hist;
            for (int v : values) {
                sum += v;
                ++hist[v];
            }
            size_t n = values.size();
            const auto& a = stats.axes.at(axis);
            CHECK(a.mean == static_cast<double>(sum) / static_cast<double>(n));
            CHECK(a.median == values[(n - 1) / 2]);
            CHECK(a.p25 == values[(n - 1) / 4]);
            CHECK(a.p75 == values[(3 * (n - 1)) / 4]);
            CHECK(a.p25 <= a.median);
            CHECK(a.median <= a.p75);
            for (const auto& [bucket, count] : hist) {
                CHECK(a.histogram.at(bucket) == count);
            }
        }
    }
}

TEST_CASE("judge_external_dataset") {
    SUBCASE("constant judge -> zero-variance stats") {
        test::ScriptedChat chat([](const backends::ChatRequest&) {
            return R"({"quality":8,"difficulty":8,"Relevance2Medicine":6,"MentionSpecificDetails":"False"})";
        });
        std::vector<json> rows;
        for (int i = 0; i < 120; ++i) {
            rows.push_back({{"instruction", "Q" + std::to_string(i)}, {"response", "A"}});
        }
        synthesis::ChatCallOptions opts{"m", 256, 0.7, 0.0};
        auto result = judge_external_dataset(rows, "instruction", 50, chat, opts, 5, 4);
        CHECK(result.scored == 50);
        CHECK(result.rejects == 0);
        CHECK(result.stats.n == 50);
        CHECK(result.stats.axes.at("quality").mean == doctest::Approx(8.0));
        CHECK(result.stats.axes.at("quality").histogram.at(8) == 50);
    }

    SUBCASE("failing judge rows land in the reject count") {
        int call = 0;
        test::ScriptedChat chat([&call](const backends::ChatRequest&) -> std::string {
            if (++call % 5 == 0) {
                return "garbage";
            }
            return R"({"quality":6,"difficulty":4,"Relevance2Medicine":3,"MentionSpecificDetails":"True"})";
        });
        std::vector<json> rows;
        for (int i = 0; i < 50; ++i) {
            rows.push_back({{"instruction", "Q" + std::to_string(i)}});
        }
        synthesis::ChatCallOptions opts{"m", 256, 0.7, 0.0};
        auto result = judge_external_dataset(rows, "instruction", 50, chat, opts, 5, 1);
        CHECK(result.scored + result.rejects == 50);
        CHECK(result.rejects == 10);
        CHECK(result.stats.n == result.scored);
    }
}

TEST_CASE("export_embeddings writes an aligned, reproducible matrix") {
    test::TempDir dir("embed");
    backends::MockEmbedBackend embed(7, 16);
    std::vector<json> rows;
    for (int i = 0; i < 10; ++i) {
        rows.push_back({{"id", "row" + std::to_string(i)}, {"instruction", "text " + std::to_string(i)}});
    }

    std::string out1 = dir.str("m1.tsv");
    std::string out2 = dir.str("m2.tsv");
    export_embeddings(rows, "instruction", "id", embed, out1);
    export_embeddings(rows, "instruction", "id", embed, out2);
    CHECK(test::read_file(out1) == test::read_file(out2));

    std::ifstream in(out1);
    std::string header;
    std::getline(in, header);
    CHECK(header == "16");
    int data_rows = 0;
    std::string line;
    while (std::getline(in, line)) {
        REQUIRE(line.rfind("row", 0) == 0);
        // row norm 1 +/- 1e-6 under the unit-norm mock
        double norm_sq = 0.0;
        size_t pos = line.find('\t');
        int fields = 0;
        while (pos != std::string::npos) {
            size_t next = line.find('\t', pos + 1);
            std::string field = line.substr(pos + 1, next == std::string::npos ? std::string::npos
                                                                               : next - pos - 1);
            norm_sq += std::stod(field) * std::stod(field);
            ++fields;
            pos = next;
        }
        CHECK(fields == 16);
        CHECK(std::abs(std::sqrt(norm_sq) - 1.0) < 1e-6);
        ++data_rows;
    }
    CHECK(data_rows == 10);
}
