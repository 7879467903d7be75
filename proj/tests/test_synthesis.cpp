// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <set>

#include "helpers.hpp"
#include "medforge/backends/mock.hpp"
#include "medforge/synthesis/json_extract.hpp"
#include "medforge/synthesis/synthesis.hpp"

using namespace medforge;
using synthesis::ChatCallOptions;
using synthesis::RawText;

namespace {

const ChatCallOptions kOpts{"test-model", 512, 0.7, 0.0};

RawText doc(const std::string& id, const std::string& body) { return {id, body, "test"}; }

}  // namespace

TEST_CASE("prompt templates match the stored golden resources byte-for-byte") {
    auto golden = [](const char* name) {
        return test::read_file(std::string(MEDFORGE_RESOURCE_DIR) + "/prompts/" + name);
    };
    CHECK(synthesis::instruction_generation_template() == golden("instruction_generation.txt"));
    CHECK(synthesis::instruction_scoring_template() == golden("instruction_scoring.txt"));
    CHECK(synthesis::response_two_styles_template() == golden("response_two_styles.txt"));
    CHECK(synthesis::response_reasoning_template() == golden("response_reasoning.txt"));
}

TEST_CASE("render_instruction_prompt substitutes the text verbatim") {
    auto req = synthesis::render_instruction_prompt(doc("t1", "X"), kOpts);
    CHECK(req.user_prompt.find("Ensure the two questions are as diverse as possible") !=
          std::string::npos);
    CHECK(req.user_prompt.size() >= 1);
    CHECK(req.user_prompt.back() == 'X');
    CHECK(req.temperature == doctest::Approx(0.7));

    // Two renders differ only in the substituted segment.
    auto other = synthesis::render_instruction_prompt(doc("t2", "Y"), kOpts);
    size_t common_prefix = 0;
    while (common_prefix < req.user_prompt.size() && common_prefix < other.user_prompt.size() &&
           req.user_prompt[common_prefix] == other.user_prompt[common_prefix]) {
        ++common_prefix;
    }
    CHECK(req.user_prompt.substr(0, common_prefix).find("Here is the sample text:") !=
          std::string::npos);
}

TEST_CASE("render_score_prompt embeds the instruction and decodes greedily") {
    auto req = synthesis::render_score_prompt("What is insulin?", kOpts);
    CHECK(req.user_prompt.find("Please evaluate the following query") != std::string::npos);
    CHECK(req.user_prompt.find("What is insulin?") != std::string::npos);
    CHECK(req.temperature == doctest::Approx(0.0));
    CHECK_THROWS_AS(synthesis::render_score_prompt("   ", kOpts), Error);
}

TEST_CASE("parse_instruction_pair") {
    SUBCASE("plain object") {
        auto pair = synthesis::parse_instruction_pair(R"({"question1":"A?","question2":"B?"})", "t");
        CHECK(pair.question1 == "A?");
        CHECK(pair.question2 == "B?");
    }

    SUBCASE("fifty synthetic wrappings parse identically") {
        const std::string payload = R"({"question1": "What causes anemia?", "question2": "How is anemia treated?"})";
        std::vector<std::string> prefixes{
            "",
            "Sure! Here are the questions:\n",
            "Model output follows.\n\n",
            "```json\n",
            "Some prose first.\n```json\n",
        };
        std::vector<std::string> suffixes{
            "",
            "\n```",
            "\n```\nHope that helps!",
            "\nThat is all.",
            "\n\n-- end --",
        };
        int combos = 0;
        for (const auto& pre : prefixes) {
            for (const auto& suf : suffixes) {
                for (const char* pad : {"", "  "}) {
                    auto pair = synthesis::parse_instruction_pair(pre + pad + payload + suf, "t");
                    CHECK(pair.question1 == "What causes anemia?");
                    CHECK(pair.question2 == "How is anemia treated?");
                    ++combos;
                }
            }
        }
        CHECK(combos == 50);
    }

    SUBCASE("failures") {
        CHECK_THROWS_AS(synthesis::parse_instruction_pair(R"({"question1":"A?"})", "t"),
                        ParseFailure);
        CHECK_THROWS_AS(synthesis::parse_instruction_pair(R"({"question1":"","question2":"B"})", "t"),
                        ParseFailure);
        CHECK_THROWS_AS(synthesis::parse_instruction_pair("no json here", "t"), ParseFailure);
        CHECK_THROWS_AS(
            synthesis::parse_instruction_pair(R"({"question1":"Same? ","question2":"same?"})", "t"),
            DuplicateQuestions);
    }
}

TEST_CASE("parse_score_card") {
    SUBCASE("paper-format output") {
        auto card = synthesis::parse_score_card(
            R"({"quality":9,"difficulty":8,"Relevance2Medicine":6,"MentionSpecificDetails":"False"})");
        CHECK(card.quality == 9);
        CHECK(card.difficulty == 8);
        CHECK(card.relevance == 6);
        CHECK_FALSE(card.mentions_details);
    }

    SUBCASE("tolerance table") {
        // bare JSON boolean
        CHECK(synthesis::parse_score_card(
                  R"({"quality":5,"difficulty":5,"Relevance2Medicine":3,"MentionSpecificDetails":true})")
                  .mentions_details);
        // mixed-case string boolean
        CHECK_FALSE(synthesis::parse_score_card(
                        R"({"quality":5,"difficulty":5,"Relevance2Medicine":3,"MentionSpecificDetails":"FALSE"})")
                        .mentions_details);
        // complexity alias for difficulty
        CHECK(synthesis::parse_score_card(
                  R"({"quality":5,"complexity":7,"Relevance2Medicine":3,"MentionSpecificDetails":"True"})")
                  .difficulty == 7);
        // integral float
        CHECK(synthesis::parse_score_card(
                  R"({"quality":8.0,"difficulty":5,"Relevance2Medicine":3,"MentionSpecificDetails":"True"})")
                  .quality == 8);
        // case-insensitive keys
        CHECK(synthesis::parse_score_card(
                  R"({"Quality":5,"Difficulty":5,"relevance2medicine":4,"mentionspecificdetails":"True"})")
                  .relevance == 4);
    }

    SUBCASE("range violations") {
        CHECK_THROWS_AS(
            synthesis::parse_score_card(
                R"({"quality":0,"difficulty":5,"Relevance2Medicine":3,"MentionSpecificDetails":"True"})"),
            RangeViolation);
        CHECK_THROWS_AS(
            synthesis::parse_score_card(
                R"({"quality":11,"difficulty":5,"Relevance2Medicine":3,"MentionSpecificDetails":"True"})"),
            RangeViolation);
        CHECK_THROWS_AS(
            synthesis::parse_score_card(
                R"({"quality":5,"difficulty":5,"Relevance2Medicine":7,"MentionSpecificDetails":"True"})"),
            RangeViolation);
    }

    SUBCASE("missing keys and bad types") {
        CHECK_THROWS_AS(synthesis::parse_score_card(R"({"quality":5,"difficulty":5})"),
                        ParseFailure);
        CHECK_THROWS_AS(
            synthesis::parse_score_card(
                R"({"quality":"high","difficulty":5,"Relevance2Medicine":3,"MentionSpecificDetails":"True"})"),
            ParseFailure);
    }
}

TEST_CASE("extract_first_json_object skips prose braces and finds the object") {
    auto obj = synthesis::extract_first_json_object("prose {not json} then {\"k\": [1, 2]} end");
    CHECK(obj["k"][1] == 2);
    CHECK_THROWS_AS(synthesis::extract_first_json_object("{unclosed"), ParseFailure);
}

TEST_CASE("synthesize_instructions") {
    synthesis::SynthesisPolicy policy;
    policy.max_parse_retries = 2;
    policy.workers = 4;

    SUBCASE("mock backend: 10 texts -> 20 records, no rejects, input order") {
        backends::MockChatBackend chat(7);
        std::vector<RawText> corpus;
        for (int i = 0; i < 10; ++i) {
            corpus.push_back(doc("d" + std::to_string(100 + i),
                                 "Clinical note number " + std::to_string(i) + " about insulin."));
        }
        auto result = synthesis::synthesize_instructions(corpus, chat, kOpts, policy);
        REQUIRE(result.instructions.size() == 20);
        CHECK(result.rejects.empty());
        for (size_t i = 0; i < corpus.size(); ++i) {
            CHECK(result.instructions[2 * i].text_id == corpus[i].id);
            CHECK(result.instructions[2 * i].slot == 1);
            CHECK(result.instructions[2 * i + 1].slot == 2);
        }
        for (const auto& s : result.instructions) {
            CHECK(s.score.in_range());
        }
    }

    SUBCASE("malformed generation three times (retries=2) -> one reject, three attempts") {
        test::ScriptedChat chat([](const backends::ChatRequest&) { return "not json at all"; });
        auto result = synthesize_instructions({doc("d1", "text body")}, chat, kOpts, policy);
        CHECK(result.instructions.empty());
        REQUIRE(result.rejects.size() == 1);
        CHECK(result.rejects[0].text_id == "d1");
        CHECK(result.rejects[0].stage == "generation");
        CHECK(result.rejects[0].reason == "ParseFailure");
        CHECK(chat.calls() == 3);
    }

    SUBCASE("score failure retries regenerate; reject carries scoring stage") {
        test::ScriptedChat chat([](const backends::ChatRequest& req) -> std::string {
            if (req.user_prompt.find("Please evaluate") != std::string::npos) {
                return R"({"quality":99,"difficulty":5,"Relevance2Medicine":3,"MentionSpecificDetails":"True"})";
            }
            return R"({"question1":"A?","question2":"B?"})";
        });
        auto result = synthesize_instructions({doc("d1", "text body")}, chat, kOpts, policy);
        CHECK(result.instructions.empty());
        REQUIRE(result.rejects.size() == 1);
        CHECK(result.rejects[0].stage == "scoring");
        CHECK(result.rejects[0].reason == "RangeViolation");
        // per attempt: 1 generation + 1 scoring (first score already fails)
        CHECK(chat.calls() == 6);
    }

    SUBCASE("transport errors reject immediately") {
        test::ScriptedChat chat([](const backends::ChatRequest&) { return "unreachable"; });
        chat.fail_first(1000);
        auto result = synthesize_instructions({doc("d1", "text body")}, chat, kOpts, policy);
        REQUIRE(result.rejects.size() == 1);
        CHECK(result.rejects[0].reason == "TransportError");
        CHECK(chat.calls() == 1);
    }

    SUBCASE("empty corpus -> empty output") {
        backends::MockChatBackend chat(7);
        auto result = synthesize_instructions({}, chat, kOpts, policy);
        CHECK(result.instructions.empty());
        CHECK(result.rejects.empty());
    }

    SUBCASE("duplicate corpus ids are a contract violation") {
        backends::MockChatBackend chat(7);
        CHECK_THROWS_AS(
            synthesize_instructions({doc("d1", "a"), doc("d1", "b")}, chat, kOpts, policy), Error);
    }

    SUBCASE("whitespace-only corpus text is rejected before any call") {
        test::ScriptedChat chat([](const backends::ChatRequest&) { return "unreachable"; });
        CHECK_THROWS_AS(synthesize_instructions({doc("d1", "   \n\t ")}, chat, kOpts, policy),
                        Error);
        CHECK(chat.calls() == 0);
    }

    SUBCASE("reading a scored file validates slot and score ranges") {
        nlohmann::json good{{"text_id", "t"},       {"slot", 1},      {"instruction", "q"},
                            {"quality", 5},         {"difficulty", 5}, {"relevance", 3},
                            {"mentions_details", false}};
        CHECK_NOTHROW(good.get<synthesis::ScoredInstruction>());
        nlohmann::json bad_slot = good;
        bad_slot["slot"] = 3;
        CHECK_THROWS_AS(bad_slot.get<synthesis::ScoredInstruction>(), Error);
        nlohmann::json bad_range = good;
        bad_range["relevance"] = 7;
        CHECK_THROWS_AS(bad_range.get<synthesis::ScoredInstruction>(), Error);
    }

    SUBCASE("property: mock sweep keeps every card in range, cardinality bounded") {
        backends::MockChatBackend chat(123);
        std::vector<RawText> corpus;
        for (int i = 0; i < 100; ++i) {
            corpus.push_back(doc("p" + std::to_string(i), "Body " + std::to_string(i * 17)));
        }
        auto result = synthesize_instructions(corpus, chat, kOpts, policy);
        CHECK(result.instructions.size() + 2 * result.rejects.size() == 2 * corpus.size());
        CHECK(result.instructions.size() <= 2 * corpus.size());
        bool equality_iff_no_rejects =
            (result.instructions.size() == 2 * corpus.size()) == result.rejects.empty();
        CHECK(equality_iff_no_rejects);
        for (const auto& s : result.instructions) {
            CHECK(s.score.in_range());
        }
    }
}
