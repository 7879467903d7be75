// SPDX-License-Identifier: Apache-2.0

#include "medforge/synthesis/synthesis.hpp"

#include <cmath>
#include <unordered_set>

#include "medforge/common/errors.hpp"
#include "medforge/common/parallel.hpp"
#include "medforge/common/text.hpp"
#include "medforge/synthesis/json_extract.hpp"

namespace medforge::synthesis {

using nlohmann::json;

void to_json(json& j, const RawText& t) {
    j = json{{"id", t.id}, {"text", t.text}, {"source", t.source}};
}

void from_json(const json& j, RawText& t) {
    t.id = j.at("id").get<std::string>();
    t.text = j.at("text").get<std::string>();
    t.source = j.value("source", std::string());
}

void to_json(json& j, const ScoredInstruction& s) {
    j = json{{"text_id", s.text_id},
             {"slot", s.slot},
             {"instruction", s.instruction},
             {"quality", s.score.quality},
             {"difficulty", s.score.difficulty},
             {"relevance", s.score.relevance},
             {"mentions_details", s.score.mentions_details}};
}

void from_json(const json& j, ScoredInstruction& s) {
    s.text_id = j.at("text_id").get<std::string>();
    s.slot = j.at("slot").get<int>();
    s.instruction = j.at("instruction").get<std::string>();
    s.score.quality = j.at("quality").get<int>();
    s.score.difficulty = j.at("difficulty").get<int>();
    s.score.relevance = j.at("relevance").get<int>();
    s.score.mentions_details = j.at("mentions_details").get<bool>();
    if (s.slot != 1 && s.slot != 2) {
        throw Error("scored instruction slot must be 1 or 2: " + s.text_id);
    }
    if (!s.score.in_range()) {
        throw Error("scored instruction carries out-of-range scores: " + s.text_id);
    }
    if (s.instruction.empty()) {
        throw Error("scored instruction text is empty: " + s.text_id);
    }
}

void to_json(json& j, const RejectEntry& r) {
    j = json{{"text_id", r.text_id}, {"stage", r.stage}, {"reason", r.reason}};
}

backends::ChatRequest render_instruction_prompt(const RawText& text, const ChatCallOptions& opts) {
    backends::ChatRequest req;
    req.user_prompt = substitute(instruction_generation_template(), "{text}", text.text);
    req.temperature = opts.generation_temperature;
    req.max_tokens = opts.max_tokens;
    req.model_id = opts.model_id;
    return req;
}

backends::ChatRequest render_score_prompt(const std::string& instruction,
                                          const ChatCallOptions& opts) {
    if (trim(instruction).empty()) {
        throw Error("render_score_prompt: instruction must be non-empty");
    }
    backends::ChatRequest req;
    req.user_prompt = substitute(instruction_scoring_template(), "{instruction}", instruction);
    req.temperature = opts.judge_temperature;
    req.max_tokens = opts.max_tokens;
    req.model_id = opts.model_id;
    return req;
}

namespace {

/// Case-insensitive member lookup; returns nullptr when absent.
const json* find_key(const json& obj, std::initializer_list<const char*> names) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        std::string key = to_lower(it.key());
        for (const char* name : names) {
            if (key == name) {
                return &it.value();
            }
        }
    }
    return nullptr;
}

int read_int_score(const json& obj, std::initializer_list<const char*> names,
                   const char* label) {
    const json* v = find_key(obj, names);
    if (v == nullptr) {
        throw ParseFailure(std::string("score card missing key: ") + label);
    }
    if (v->is_number_integer()) {
        return v->get<int>();
    }
    if (v->is_number_float()) {
        double d = v->get<double>();
        if (d == std::floor(d)) {
            return static_cast<int>(d);
        }
    }
    throw ParseFailure(std::string("score card key is not an integer: ") + label);
}

bool read_bool(const json& obj, std::initializer_list<const char*> names, const char* label) {
    const json* v = find_key(obj, names);
    if (v == nullptr) {
        throw ParseFailure(std::string("score card missing key: ") + label);
    }
    if (v->is_boolean()) {
        return v->get<bool>();
    }
    if (v->is_string()) {
        std::string s = to_lower(trim(v->get<std::string>()));
        if (s == "true") return true;
        if (s == "false") return false;
    }
    throw ParseFailure(std::string("score card key is not a boolean: ") + label);
}

std::string question_norm(const std::string& q) { return to_lower(collapse_whitespace(q)); }

}  // namespace

InstructionPair parse_instruction_pair(const std::string& raw, const std::string& text_id) {
    json obj = extract_first_json_object(raw);
    const json* q1 = find_key(obj, {"question1"});
    const json* q2 = find_key(obj, {"question2"});
    if (q1 == nullptr || q2 == nullptr) {
        throw ParseFailure("reply missing question1/question2");
    }
    if (!q1->is_string() || !q2->is_string()) {
        throw ParseFailure("question values must be strings");
    }
    InstructionPair pair;
    pair.text_id = text_id;
    pair.question1 = trim(q1->get<std::string>());
    pair.question2 = trim(q2->get<std::string>());
    if (pair.question1.empty() || pair.question2.empty()) {
        throw ParseFailure("question values must be non-empty");
    }
    if (question_norm(pair.question1) == question_norm(pair.question2)) {
        throw DuplicateQuestions("question1 equals question2 after normalization");
    }
    return pair;
}

ScoreCard parse_score_card(const std::string& raw) {
    json obj = extract_first_json_object(raw);
    ScoreCard card;
    card.quality = read_int_score(obj, {"quality"}, "quality");
    card.difficulty = read_int_score(obj, {"difficulty", "complexity"}, "difficulty");
    card.relevance = read_int_score(obj, {"relevance2medicine", "relevance"}, "Relevance2Medicine");
    card.mentions_details = read_bool(obj, {"mentionspecificdetails"}, "MentionSpecificDetails");
    if (!card.in_range()) {
        throw RangeViolation("score outside rubric range: quality=" + std::to_string(card.quality) +
                             " difficulty=" + std::to_string(card.difficulty) +
                             " relevance=" + std::to_string(card.relevance));
    }
    return card;
}

namespace {

struct TextOutcome {
    std::vector<ScoredInstruction> instructions;  // empty on failure
    RejectEntry reject;                           // valid when instructions empty
    bool rejected = false;
};

TextOutcome process_text(const RawText& text, backends::ChatBackend& chat,
                         const ChatCallOptions& opts, const SynthesisPolicy& policy) {
    TextOutcome outcome;
    std::string stage = "generation";
    std::string reason = "ParseFailure";
    int attempts = policy.max_parse_retries + 1;
    for (int attempt = 0; attempt < attempts; ++attempt) {
        InstructionPair pair;
        try {
            auto resp = chat.complete(render_instruction_prompt(text, opts));
            pair = parse_instruction_pair(resp.text, text.id);
        } catch (const ParseFailure& e) {
            stage = "generation";
            reason = error_kind(e);
            continue;
        } catch (const DuplicateQuestions& e) {
            stage = "generation";
            reason = error_kind(e);
            continue;
        } catch (const Error& e) {
            // Transport-level errors already consumed their own retry
            // budget; fail the text immediately.
            outcome.rejected = true;
            outcome.reject = {text.id, "generation", error_kind(e)};
            return outcome;
        }
        try {
            ScoreCard card1 = parse_score_card(
                chat.complete(render_score_prompt(pair.question1, opts)).text);
            ScoreCard card2 = parse_score_card(
                chat.complete(render_score_prompt(pair.question2, opts)).text);
            outcome.instructions.push_back({text.id, 1, pair.question1, card1});
            outcome.instructions.push_back({text.id, 2, pair.question2, card2});
            return outcome;
        } catch (const ParseFailure& e) {
            stage = "scoring";
            reason = error_kind(e);
        } catch (const RangeViolation& e) {
            stage = "scoring";
            reason = error_kind(e);
        } catch (const Error& e) {
            outcome.rejected = true;
            outcome.reject = {text.id, "scoring", error_kind(e)};
            return outcome;
        }
    }
    outcome.rejected = true;
    outcome.reject = {text.id, stage, reason};
    return outcome;
}

}  // namespace

SynthesisResult synthesize_instructions(const std::vector<RawText>& corpus,
                                        backends::ChatBackend& chat, const ChatCallOptions& opts,
                                        const SynthesisPolicy& policy) {
    std::unordered_set<std::string> seen;
    for (const auto& text : corpus) {
        if (!seen.insert(text.id).second) {
            throw Error("corpus ids must be unique; duplicate: " + text.id);
        }
        if (trim(text.text).empty()) {
            throw Error("corpus text must be non-empty after trim: " + text.id);
        }
    }

    std::vector<TextOutcome> outcomes(corpus.size());
    parallel_for_index(corpus.size(), static_cast<size_t>(std::max(1, policy.workers)),
                       [&](size_t i) { outcomes[i] = process_text(corpus[i], chat, opts, policy); });

    SynthesisResult result;
    for (const auto& outcome : outcomes) {
        if (outcome.rejected) {
            result.rejects.push_back(outcome.reject);
        } else {
            result.instructions.insert(result.instructions.end(), outcome.instructions.begin(),
                                       outcome.instructions.end());
        }
    }
    return result;
}

}  // namespace medforge::synthesis
