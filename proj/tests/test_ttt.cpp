// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "medforge/backends/mock.hpp"
#include "medforge/common/rng.hpp"
#include "medforge/ttt/ttt.hpp"

using namespace medforge;
using namespace medforge::ttt;
using backends::EmbeddingVector;

namespace {

responses::SftSample reasoning_sample(const std::string& id, const std::string& instruction) {
    responses::SftSample s;
    s.id = id;
    s.instruction = instruction;
    s.response = "Thought: t\nSummarization: s for " + id;
    s.style = responses::SampleStyle::reasoning;
    s.score = {7, 9, 5, false};
    s.text_id = id;
    return s;
}

BenchmarkItem item(const std::string& id, const std::string& stem, const std::string& gold) {
    BenchmarkItem it;
    it.question_id = id;
    it.stem = stem;
    it.options = {{"A", "alpha"}, {"B", "beta"}, {"C", "gamma"}, {"D", "delta"}};
    it.gold = gold;
    return it;
}

std::vector<BenchmarkItem> make_items(int n) {
    std::vector<BenchmarkItem> items;
    const char* letters[] = {"A", "B", "C", "D"};
    for (int i = 0; i < n; ++i) {
        items.push_back(item("q" + std::to_string(100 + i),
                             "Benchmark question number " + std::to_string(i) + "?",
                             letters[i % 4]));
    }
    return items;
}

/// Trainer stub whose generate() fails; train/restore delegate to the mock
/// so the call log stays meaningful.
class GenerateFailingTrainer : public backends::TrainerBackend {
public:
    explicit GenerateFailingTrainer(backends::MockTrainerBackend& inner) : inner_(inner) {}
    backends::TrainerSession train(const backends::TrainerJobSpec& spec,
                                   backends::TrainerSession session) override {
        return inner_.train(spec, session);
    }
    std::string generate(const backends::TrainerSession&, const std::string&) override {
        throw TrainerUnavailable("generation offline");
    }
    backends::TrainerSession restore(backends::TrainerSession session) override {
        return inner_.restore(session);
    }

private:
    backends::MockTrainerBackend& inner_;
};

}  // namespace

TEST_CASE("build_index") {
    backends::MockEmbedBackend embed(7, 32);
    std::vector<responses::SftSample> samples;
    for (int i = 0; i < 100; ++i) {
        samples.push_back(reasoning_sample("r" + std::to_string(i), "Instruction " + std::to_string(i)));
    }
    auto index = build_index(samples, embed);
    CHECK(index.size() == 100);
    CHECK(index.dim == 32);

    SUBCASE("duplicate instructions produce duplicate vectors, both retained") {
        auto dup = samples;
        dup.push_back(reasoning_sample("r-dup", samples[0].instruction));
        auto idx2 = build_index(dup, embed);
        CHECK(idx2.size() == 101);
        CHECK(idx2.vectors.front().values == idx2.vectors.back().values);
    }

    SUBCASE("rebuild from identical inputs yields an identical digest") {
        auto again = build_index(samples, embed);
        CHECK(again.digest() == index.digest());
    }
}

TEST_CASE("retrieve_top1") {
    backends::MockEmbedBackend embed(7, 32);
    std::vector<responses::SftSample> samples;
    for (int i = 0; i < 50; ++i) {
        samples.push_back(reasoning_sample("r" + std::to_string(100 + i),
                                           "Unique instruction " + std::to_string(i)));
    }
    auto index = build_index(samples, embed);

    SUBCASE("self-query returns the row with similarity 1") {
        auto query = embed.embed({samples[17].instruction})[0];
        auto [id, sim] = retrieve_top1(index, query);
        CHECK(id == samples[17].id);
        CHECK(std::abs(sim - 1.0) <= 1e-9);
    }

    SUBCASE("orthogonal query: similarity 0, deterministic lowest-id tie") {
        RetrievalIndex tiny;
        tiny.dim = 4;
        tiny.ids = {"row-b", "row-a", "row-c"};
        tiny.vectors = {EmbeddingVector{{1, 0, 0, 0}}, EmbeddingVector{{0, 1, 0, 0}},
                        EmbeddingVector{{1, 1, 0, 0}}};
        tiny.payloads = {{"p", "r"}, {"p", "r"}, {"p", "r"}};
        EmbeddingVector query{{0, 0, 1, 0}};
        auto [id, sim] = retrieve_top1(tiny, query);
        CHECK(std::abs(sim) <= 1e-9);
        CHECK(id == "row-a");
    }

    SUBCASE("1000 vectors x 100 queries: exhaustive-scan oracle agreement") {
        DetRng gen(321);
        RetrievalIndex big;
        big.dim = 16;
        for (int i = 0; i < 1000; ++i) {
            EmbeddingVector v;
            for (int d = 0; d < 16; ++d) {
                v.values.push_back(gen.unit_double() * 2.0 - 1.0);
            }
            char id[16];
            std::snprintf(id, sizeof(id), "v%04d", i);
            big.ids.push_back(id);
            big.vectors.push_back(std::move(v));
            big.payloads.emplace_back("p", "r");
        }
        for (int q = 0; q < 100; ++q) {
            EmbeddingVector query;
            for (int d = 0; d < 16; ++d) {
                query.values.push_back(gen.unit_double() * 2.0 - 1.0);
            }
            auto [got_id, got_sim] = retrieve_top1(big, query);

            // independent exhaustive scan
            double qn = 0.0;
            for (double v : query.values) {
                qn += v * v;
            }
            qn = std::sqrt(qn);
            std::string best_id;
            double best = -2.0;
            for (size_t i = 0; i < big.ids.size(); ++i) {
                double dot = 0.0;
                double rn = 0.0;
                for (size_t d = 0; d < 16; ++d) {
                    dot += query.values[d] * big.vectors[i].values[d];
                    rn += big.vectors[i].values[d] * big.vectors[i].values[d];
                }
                double sim = dot / (qn * std::sqrt(rn));
                if (sim > best || (sim == best && big.ids[i] < best_id)) {
                    best = sim;
                    best_id = big.ids[i];
                }
            }
            CHECK(got_id == best_id);
            CHECK(std::abs(got_sim - best) <= 1e-9);
        }
    }

    SUBCASE("top-k generalization: k=1 equals top1, results sorted, k capped at size") {
        auto query = embed.embed({"some unseen query"})[0];
        auto [id1, sim1] = retrieve_top1(index, query);
        auto top3 = retrieve_top_k(index, query, 3);
        REQUIRE(top3.size() == 3);
        CHECK(top3[0].first == id1);
        CHECK(top3[0].second == sim1);
        CHECK(top3[0].second >= top3[1].second);
        CHECK(top3[1].second >= top3[2].second);
        CHECK(retrieve_top_k(index, query, 10000).size() == index.size());
    }

    SUBCASE("error paths") {
        EmbeddingVector wrong_dim{{1.0, 2.0}};
        CHECK_THROWS_AS(retrieve_top1(index, wrong_dim), DimensionMismatch);
        EmbeddingVector zero{std::vector<double>(32, 0.0)};
        CHECK_THROWS_AS(retrieve_top1(index, zero), DegenerateVector);
    }
}

TEST_CASE("run_episode") {
    backends::MockEmbedBackend embed(7, 32);
    std::vector<responses::SftSample> samples;
    for (int i = 0; i < 10; ++i) {
        samples.push_back(reasoning_sample("r" + std::to_string(i), "Instruction " + std::to_string(i)));
    }
    auto index = build_index(samples, embed);
    EpisodeOptions opts;
    opts.hyperparams["learning_rate"] = "5e-7";

    SUBCASE("happy path: trained, restored, adapted-state answer") {
        backends::MockTrainerBackend trainer(7);
        backends::TrainerSession session{"s", backends::SessionState::clean};
        auto episode = run_episode("q1", "query text", "prompt text", index, embed, trainer,
                                   session, opts);
        CHECK(episode.trained);
        CHECK(episode.restored);
        CHECK(episode.error.empty());
        CHECK(episode.answer.find("state=adapted") != std::string::npos);
        CHECK_FALSE(episode.retrieved_id.empty());
        CHECK(session.state == backends::SessionState::clean);

        auto audits = trainer.train_audits();
        REQUIRE(audits.size() == 1);
        CHECK(audits[0].hyperparams.at("learning_rate") == "5e-7");
    }

    SUBCASE("train failure: restored episode with error, session clean") {
        struct TrainFailingTrainer : backends::TrainerBackend {
            backends::MockTrainerBackend inner{7};
            backends::TrainerSession train(const backends::TrainerJobSpec&,
                                           backends::TrainerSession) override {
                throw TrainerUnavailable("trainer offline");
            }
            std::string generate(const backends::TrainerSession& s, const std::string& p) override {
                return inner.generate(s, p);
            }
            backends::TrainerSession restore(backends::TrainerSession s) override {
                return inner.restore(s);
            }
        } trainer;
        backends::TrainerSession session{"s", backends::SessionState::clean};
        auto episode = run_episode("q1", "query", "prompt", index, embed, trainer, session, opts);
        CHECK_FALSE(episode.trained);
        CHECK(episode.restored);
        CHECK(episode.error == "TrainerUnavailable");
        CHECK(episode.answer.empty());
        CHECK(session.state == backends::SessionState::clean);
    }

    SUBCASE("top_k=3 trains on three retrieved instances") {
        backends::MockTrainerBackend trainer(7);
        backends::TrainerSession session{"s", backends::SessionState::clean};
        EpisodeOptions k3 = opts;
        k3.top_k = 3;
        auto query_vec = embed.embed({"query text"})[0];
        auto expected = retrieve_top_k(index, query_vec, 3);
        auto episode = run_episode("q1", "query text", "prompt", index, embed, trainer, session, k3);
        CHECK(episode.trained);
        CHECK(episode.retrieved_id == expected[0].first);

        backends::TrainerJobSpec expected_job;
        for (const auto& [id, sim] : expected) {
            auto row = std::find(index.ids.begin(), index.ids.end(), id);
            expected_job.samples.push_back(
                index.payloads[static_cast<size_t>(row - index.ids.begin())]);
        }
        expected_job.hyperparams = k3.hyperparams;
        auto audits = trainer.train_audits();
        REQUIRE(audits.size() == 1);
        CHECK(audits[0].samples_digest == backends::trainer_train_digest(expected_job));
    }

    SUBCASE("two consecutive episodes: strict train/restore alternation") {
        backends::MockTrainerBackend trainer(7);
        backends::TrainerSession session{"s", backends::SessionState::clean};
        run_episode("q1", "query one", "prompt one", index, embed, trainer, session, opts);
        run_episode("q2", "query two", "prompt two", index, embed, trainer, session, opts);
        std::vector<std::string> train_restore;
        for (const auto& call : trainer.call_log()) {
            if (call != "generate") {
                train_restore.push_back(call);
            }
        }
        CHECK(train_restore == std::vector<std::string>{"train", "restore", "train", "restore"});
    }
}

TEST_CASE("few-shot prompt rendering") {
    auto items = make_items(4);
    std::vector<BenchmarkItem> exemplars(items.begin(), items.begin() + 3);
    std::string prompt = render_fewshot_prompt(items[3], exemplars);

    int answered = 0;
    int open = 0;
    size_t pos = 0;
    while ((pos = prompt.find("Answer:", pos)) != std::string::npos) {
        size_t eol = prompt.find('\n', pos);
        std::string line = prompt.substr(pos, eol == std::string::npos ? std::string::npos
                                                                       : eol - pos);
        if (line == "Answer:") {
            ++open;
        } else {
            ++answered;
        }
        pos += 7;
    }
    CHECK(answered == 3);
    CHECK(open == 1);
    CHECK(prompt.rfind("Answer:") == prompt.size() - 7);  // trailing open answer
    // the target's gold is never rendered as an answered line
    bool target_gold_leaked = prompt.find("Answer: " + items[3].gold) != std::string::npos;
    CHECK_FALSE(target_gold_leaked);
    CHECK(prompt.find("A. alpha") != std::string::npos);

    // identical exemplars produce identical prompts
    CHECK(render_fewshot_prompt(items[3], exemplars) == prompt);
}

TEST_CASE("choice extraction rule table") {
    std::vector<std::string> letters{"A", "B", "C", "D"};
    auto got = [&](const std::string& s) {
        auto c = extract_choice(s, letters);
        return c ? *c : std::string("<none>");
    };

    CHECK(got("...thus Answer: C") == "C");
    CHECK(got("answer: d") == "D");
    CHECK(got("Answer:   (B)") == "B");
    CHECK(got("The answer is (B).") == "B");
    CHECK(got("I pick B, final answer") == "B");
    CHECK(got("no idea") == "<none>");
    CHECK(got("") == "<none>");
    // articles and lowercase letters never match the fallback rule
    CHECK(got("this is a hard question") == "<none>");
    // invalid letter after Answer: falls through to the standalone rule
    CHECK(got("Answer: Z, but maybe C") == "C");
    // the first valid Answer: wins over later ones
    CHECK(got("Answer: A ... Answer: B") == "A");
    // last standalone letter wins when no Answer: prefix exists
    CHECK(got("Could be A. Could be D.") == "D");
}

TEST_CASE("run_benchmark") {
    backends::MockEmbedBackend embed(7, 32);
    std::vector<responses::SftSample> samples;
    for (int i = 0; i < 25; ++i) {
        samples.push_back(reasoning_sample("r" + std::to_string(i), "Instruction " + std::to_string(i)));
    }
    auto index = build_index(samples, embed);
    auto items = make_items(20);

    auto oracle_trainer = [&items](backends::MockTrainerMode mode) {
        auto trainer = std::make_unique<backends::MockTrainerBackend>(7, mode);
        std::map<std::string, std::string> key;
        for (const auto& it : items) {
            key[it.stem] = it.gold;
        }
        trainer->set_answer_key(std::move(key));
        return trainer;
    };

    SUBCASE("gold-iff-adapted mock: ttt on -> 1.0, ttt off -> 0.0") {
        BenchmarkOptions opts;
        opts.runs = 3;
        opts.seed = 9;

        auto on_trainer = oracle_trainer(backends::MockTrainerMode::oracle);
        opts.ttt = true;
        auto on = run_benchmark(items, index, embed, *on_trainer, opts);
        CHECK(on.mean_accuracy == doctest::Approx(1.0));
        for (double a : on.per_run_accuracy) {
            CHECK(a == doctest::Approx(1.0));
        }

        auto off_trainer = oracle_trainer(backends::MockTrainerMode::oracle);
        opts.ttt = false;
        auto off = run_benchmark(items, index, embed, *off_trainer, opts);
        CHECK(off.mean_accuracy == doctest::Approx(0.0));

        // every persisted episode restored; ttt episodes trained
        for (const auto& e : on.episodes) {
            CHECK(e.restored);
            CHECK(e.trained);
        }
        for (const auto& e : off.episodes) {
            CHECK(e.restored);
            CHECK_FALSE(e.trained);
        }

        // strict (train, restore)* alternation across the whole ttt run
        std::vector<std::string> tr;
        for (const auto& call : on_trainer->call_log()) {
            if (call != "generate") {
                tr.push_back(call);
            }
        }
        REQUIRE(tr.size() == 2 * 3 * items.size());
        for (size_t i = 0; i < tr.size(); i += 2) {
            CHECK(tr[i] == "train");
            CHECK(tr[i + 1] == "restore");
        }
    }

    SUBCASE("report mean is the exact arithmetic mean; reruns are identical") {
        BenchmarkOptions opts;
        opts.runs = 3;
        opts.seed = 11;
        opts.ttt = true;
        auto t1 = oracle_trainer(backends::MockTrainerMode::echo);
        auto r1 = run_benchmark(items, index, embed, *t1, opts);
        double sum = 0.0;
        for (double a : r1.per_run_accuracy) {
            sum += a;
        }
        CHECK(r1.mean_accuracy == sum / 3.0);

        auto t2 = oracle_trainer(backends::MockTrainerMode::echo);
        auto r2 = run_benchmark(items, index, embed, *t2, opts);
        CHECK(r1.per_run_accuracy == r2.per_run_accuracy);
        REQUIRE(r1.episodes.size() == r2.episodes.size());
        for (size_t i = 0; i < r1.episodes.size(); ++i) {
            CHECK(nlohmann::json(r1.episodes[i]) == nlohmann::json(r2.episodes[i]));
        }
    }

    SUBCASE("generate failures count as incorrect but keep the contract") {
        backends::MockTrainerBackend inner(7);
        GenerateFailingTrainer failing(inner);
        BenchmarkOptions opts;
        opts.runs = 1;
        opts.seed = 2;
        opts.ttt = true;
        auto report = run_benchmark(items, index, embed, failing, opts);
        CHECK(report.mean_accuracy == doctest::Approx(0.0));
        for (const auto& e : report.episodes) {
            CHECK(e.restored);
            CHECK(e.trained);
            CHECK(e.error == "TrainerUnavailable");
        }
        std::vector<std::string> tr;
        for (const auto& call : inner.call_log()) {
            if (call != "generate") {
                tr.push_back(call);
            }
        }
        for (size_t i = 0; i < tr.size(); i += 2) {
            CHECK(tr[i] == "train");
            CHECK(tr[i + 1] == "restore");
        }
    }

    SUBCASE("errors") {
        backends::MockTrainerBackend trainer(7);
        BenchmarkOptions opts;
        CHECK_THROWS_AS(run_benchmark({}, index, embed, trainer, opts), EmptyBenchmark);
        CHECK_THROWS_AS(run_benchmark(make_items(3), index, embed, trainer, opts),
                        EmptyBenchmark);  // not enough items for 3 exemplars
        BenchmarkItem bad = item("x", "stem", "E");
        CHECK_THROWS_AS(bad.validate(), Error);
    }
}
