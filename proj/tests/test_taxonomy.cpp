// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>

#include "helpers.hpp"
#include "medforge/backends/mock.hpp"
#include "medforge/taxonomy/taxonomy.hpp"

using namespace medforge;
using namespace medforge::taxonomy;

namespace {

const synthesis::ChatCallOptions kOpts{"test-model", 256, 0.7, 0.0};

responses::SftSample sample(const std::string& id) {
    responses::SftSample s;
    s.id = id;
    s.instruction = "Patient question " + id;
    s.response = "Doctor answer " + id;
    s.style = responses::SampleStyle::ordinary;
    s.score = {7, 5, 5, false};
    s.text_id = id;
    s.reward_margin = 0.1;
    return s;
}

}  // namespace

TEST_CASE("taxonomy counts and structure") {
    const auto& tree = load_taxonomy();
    CHECK(tree.primary_count() == 5);
    CHECK(tree.secondary_count() == 29);

    auto surgery = tree.children_of("Surgery");
    CHECK(surgery.size() == 10);
    CHECK(std::find(surgery.begin(), surgery.end(), "Breast Surgery") != surgery.end());

    CHECK(tree.children_of("Internal Medicine").size() == 8);
    CHECK(tree.children_of("Obstetrics and Gynecology").size() == 2);
    CHECK(tree.children_of("Pediatrics").size() == 2);
    CHECK(tree.children_of("Otorhinolaryngology").size() == 3);
    CHECK(tree.children_of(kOtherDepartments).size() == 4);

    CHECK(tree.top_level_labels().size() == 6);
    CHECK(tree.is_secondary_of("Internal Medicine", "Endocrinology"));
    CHECK_FALSE(tree.is_secondary_of("Pediatrics", "Endocrinology"));

    // names unique within each level
    auto tops = tree.top_level_labels();
    std::sort(tops.begin(), tops.end());
    CHECK(std::adjacent_find(tops.begin(), tops.end()) == tops.end());
    std::vector<std::string> all_secondaries;
    for (const auto& t : tree.top_level_labels()) {
        auto kids = tree.children_of(t);
        all_secondaries.insert(all_secondaries.end(), kids.begin(), kids.end());
    }
    std::sort(all_secondaries.begin(), all_secondaries.end());
    CHECK(std::adjacent_find(all_secondaries.begin(), all_secondaries.end()) ==
          all_secondaries.end());
}

TEST_CASE("classification templates match the stored golden resources byte-for-byte") {
    auto golden = [](const char* name) {
        return test::read_file(std::string(MEDFORGE_RESOURCE_DIR) + "/prompts/" + name);
    };
    CHECK(classify_primary_template() == golden("classify_primary.txt"));
    CHECK(classify_secondary_template("Internal Medicine") ==
          golden("classify_internal_medicine.txt"));
    CHECK(classify_secondary_template("Surgery") == golden("classify_surgery.txt"));
    CHECK(classify_secondary_template("Obstetrics and Gynecology") ==
          golden("classify_obstetrics_gynecology.txt"));
    CHECK(classify_secondary_template("Pediatrics") == golden("classify_pediatrics.txt"));
    CHECK(classify_secondary_template("Otorhinolaryngology") ==
          golden("classify_otorhinolaryngology.txt"));
    CHECK(classify_secondary_template(kOtherDepartments) ==
          golden("classify_other_departments.txt"));
    CHECK_THROWS_AS(classify_secondary_template("Podiatry"), Error);
}

TEST_CASE("label normalization") {
    CHECK(normalize_label("internal medicine.") == "internal medicine");
    CHECK(normalize_label("  Internal   Medicine ") == "internal medicine");
    CHECK(normalize_label("Otorhinolaryngology (ENT)") == "otorhinolaryngology ent");
    CHECK(normalize_label("'Endocrinology'") == "endocrinology");

    // idempotence over assorted strings
    const char* inputs[] = {"A b C!", "##x##", "  spaced   out  ", "None.", "(TCM)"};
    for (const char* s : inputs) {
        CHECK(normalize_label(normalize_label(s)) == normalize_label(s));
    }
}

TEST_CASE("classify_primary") {
    auto s = sample("s1");

    SUBCASE("exact and normalized replies match") {
        test::ScriptedChat exact([](const backends::ChatRequest&) { return "Internal Medicine"; });
        CHECK(classify_primary(s, exact, kOpts, 2).label == "Internal Medicine");

        test::ScriptedChat messy([](const backends::ChatRequest&) { return " internal medicine. "; });
        auto r = classify_primary(s, messy, kOpts, 2);
        CHECK(r.label == "Internal Medicine");
        CHECK_FALSE(r.flagged);
    }

    SUBCASE("the prompt's ENT spelling maps to the Otorhinolaryngology primary") {
        test::ScriptedChat ent([](const backends::ChatRequest&) {
            return "Otorhinolaryngology (ENT)";
        });
        CHECK(classify_primary(s, ent, kOpts, 2).label == "Otorhinolaryngology");
    }

    SUBCASE("a secondary name is unparseable at this level -> fallback with flag") {
        test::ScriptedChat wrong([](const backends::ChatRequest&) { return "Cardiology"; });
        auto r = classify_primary(s, wrong, kOpts, 2);
        CHECK(r.label == kOtherDepartments);
        CHECK(r.flagged);
        CHECK(wrong.calls() == 3);  // retried the full budget
    }

    SUBCASE("prompt embeds the dialogue") {
        std::string seen;
        test::ScriptedChat probe([&seen](const backends::ChatRequest& req) {
            seen = req.user_prompt;
            return "Pediatrics";
        });
        classify_primary(s, probe, kOpts, 0);
        CHECK(seen.find("Patient: " + s.instruction) != std::string::npos);
        CHECK(seen.find("Doctor: " + s.response) != std::string::npos);
        CHECK(seen.find("output only the department name") != std::string::npos);
    }
}

TEST_CASE("classify_secondary") {
    auto s = sample("s1");

    SUBCASE("valid child") {
        test::ScriptedChat chat([](const backends::ChatRequest&) { return "Endocrinology"; });
        auto r = classify_secondary(s, "Internal Medicine", chat, kOpts, 2);
        CHECK(r.label == "Endocrinology");
        CHECK_FALSE(r.flagged);
    }
    SUBCASE("None -> Unclassified without flag") {
        test::ScriptedChat chat([](const backends::ChatRequest&) { return "None"; });
        auto r = classify_secondary(s, "Internal Medicine", chat, kOpts, 2);
        CHECK(r.label == kUnclassified);
        CHECK_FALSE(r.flagged);
    }
    SUBCASE("non-child reply -> Unclassified with flag") {
        test::ScriptedChat chat([](const backends::ChatRequest&) { return "Dermatology"; });
        auto r = classify_secondary(s, "Pediatrics", chat, kOpts, 2);
        CHECK(r.label == kUnclassified);
        CHECK(r.flagged);
    }
}

TEST_CASE("classify_corpus") {
    SUBCASE("programmed router reproduces its distribution exactly") {
        // Route by sample index parity: even -> Internal Medicine/Endocrinology,
        // odd -> Surgery/None.
        test::ScriptedChat chat([](const backends::ChatRequest& req) -> std::string {
            bool stage2 = req.user_prompt.find("within") != std::string::npos;
            bool even = req.user_prompt.find("even") != std::string::npos;
            if (!stage2) {
                return even ? "Internal Medicine" : "Surgery";
            }
            return even ? "Endocrinology" : "None";
        });
        std::vector<responses::SftSample> samples;
        for (int i = 0; i < 10; ++i) {
            auto s = sample("s" + std::to_string(i));
            s.instruction += i % 2 == 0 ? " even" : " odd";
            samples.push_back(s);
        }
        auto result = classify_corpus(samples, chat, kOpts, {2, 4});
        CHECK(result.report.flagged == 0);
        CHECK(result.report.cells.at({"Internal Medicine", "Endocrinology"}) == 5);
        CHECK(result.report.cells.at({"Surgery", kUnclassified}) == 5);

        std::int64_t total = 0;
        for (const auto& [cell, count] : result.report.cells) {
            total += count;
        }
        CHECK(total == 10);

        for (const auto& labeled : result.labeled) {
            const auto& tree = load_taxonomy();
            CHECK(tree.is_top_level_label(labeled.primary_dept));
            bool valid_child = labeled.secondary_dept == kUnclassified ||
                               tree.is_secondary_of(labeled.primary_dept, labeled.secondary_dept);
            CHECK(valid_child);
        }
    }

    SUBCASE("all stage-2 None -> primaries assigned, all Unclassified") {
        test::ScriptedChat chat([](const backends::ChatRequest& req) -> std::string {
            if (req.user_prompt.find("within") != std::string::npos) {
                return "None";
            }
            return "Pediatrics";
        });
        auto result = classify_corpus({sample("a"), sample("b")}, chat, kOpts, {2, 2});
        for (const auto& s : result.labeled) {
            CHECK(s.primary_dept == "Pediatrics");
            CHECK(s.secondary_dept == kUnclassified);
        }
    }

    SUBCASE("empty input -> empty report") {
        backends::MockChatBackend chat(7);
        auto result = classify_corpus({}, chat, kOpts, {2, 2});
        CHECK(result.labeled.empty());
        CHECK(result.report.cells.empty());
        CHECK(result.report.flagged == 0);
    }

    SUBCASE("mock chat picks only labels offered by the prompt") {
        backends::MockChatBackend chat(7);
        std::vector<responses::SftSample> samples;
        for (int i = 0; i < 40; ++i) {
            samples.push_back(sample("m" + std::to_string(i)));
        }
        auto result = classify_corpus(samples, chat, kOpts, {2, 4});
        CHECK(result.report.flagged == 0);
        const auto& tree = load_taxonomy();
        for (const auto& s : result.labeled) {
            CHECK(tree.is_top_level_label(s.primary_dept));
            bool ok = s.secondary_dept == kUnclassified ||
                      tree.is_secondary_of(s.primary_dept, s.secondary_dept);
            CHECK(ok);
        }
    }
}
