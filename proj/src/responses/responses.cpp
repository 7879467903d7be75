// SPDX-License-Identifier: Apache-2.0

#include "medforge/responses/responses.hpp"

#include <algorithm>
#include <cmath>

#include "medforge/common/errors.hpp"
#include "medforge/common/parallel.hpp"
#include "medforge/common/text.hpp"
#include "medforge/synthesis/json_extract.hpp"

namespace medforge::responses {

using nlohmann::json;

void SplitPolicy::validate() const {
    if (complexity_threshold < 1 || complexity_threshold > 10) {
        throw ConfigError("complexity_threshold must lie in 1..10");
    }
}

const char* sample_style_name(SampleStyle style) {
    return style == SampleStyle::ordinary ? "ordinary" : "reasoning";
}

SampleStyle sample_style_from_name(const std::string& name) {
    if (name == "ordinary") return SampleStyle::ordinary;
    if (name == "reasoning") return SampleStyle::reasoning;
    throw Error("unknown sample style: " + name);
}

void to_json(json& j, const SftSample& s) {
    j = json{{"id", s.id},
             {"instruction", s.instruction},
             {"response", s.response},
             {"style", sample_style_name(s.style)},
             {"quality", s.score.quality},
             {"difficulty", s.score.difficulty},
             {"relevance", s.score.relevance},
             {"text_id", s.text_id}};
    if (!s.primary_dept.empty()) {
        j["primary_dept"] = s.primary_dept;
    }
    if (!s.secondary_dept.empty()) {
        j["secondary_dept"] = s.secondary_dept;
    }
    if (s.reward_margin) {
        j["reward_margin"] = *s.reward_margin;
    }
}

void from_json(const json& j, SftSample& s) {
    s.id = j.at("id").get<std::string>();
    s.instruction = j.at("instruction").get<std::string>();
    s.response = j.at("response").get<std::string>();
    s.style = sample_style_from_name(j.at("style").get<std::string>());
    s.score.quality = j.at("quality").get<int>();
    s.score.difficulty = j.at("difficulty").get<int>();
    s.score.relevance = j.at("relevance").get<int>();
    s.score.mentions_details = false;  // winners never mention details
    s.primary_dept = j.value("primary_dept", std::string());
    s.secondary_dept = j.value("secondary_dept", std::string());
    s.text_id = j.at("text_id").get<std::string>();
    if (j.contains("reward_margin")) {
        s.reward_margin = j["reward_margin"].get<double>();
    } else {
        s.reward_margin.reset();
    }
    if (s.response.empty()) {
        throw Error("sft sample has an empty response: " + s.id);
    }
    bool margin_ok = (s.style == SampleStyle::ordinary) == s.reward_margin.has_value();
    if (!margin_ok) {
        throw Error("sft sample reward_margin must be present iff style is ordinary: " + s.id);
    }
}

void to_json(json& j, const DpoSample& s) {
    j = json{{"id", s.id}, {"prompt", s.prompt}, {"chosen", s.chosen}, {"rejected", s.rejected}};
}

void from_json(const json& j, DpoSample& s) {
    s.id = j.at("id").get<std::string>();
    s.prompt = j.at("prompt").get<std::string>();
    s.chosen = j.at("chosen").get<std::string>();
    s.rejected = j.at("rejected").get<std::string>();
    if (s.chosen.empty() || s.rejected.empty() || s.chosen == s.rejected) {
        throw Error("dpo sample requires distinct non-empty chosen/rejected: " + s.id);
    }
}

std::string instruction_id(const ScoredInstruction& s) {
    return s.text_id + ":" + std::to_string(s.slot);
}

std::pair<std::vector<ScoredInstruction>, std::vector<ScoredInstruction>> split_by_complexity(
    const std::vector<ScoredInstruction>& instrs, const SplitPolicy& policy) {
    policy.validate();
    std::vector<ScoredInstruction> common;
    std::vector<ScoredInstruction> complex;
    for (const auto& s : instrs) {
        (policy.is_complex(s) ? complex : common).push_back(s);
    }
    return {std::move(common), std::move(complex)};
}

namespace {

backends::ChatRequest render_two_styles(const std::string& instruction, const std::string& text,
                                        const ChatCallOptions& opts) {
    backends::ChatRequest req;
    req.user_prompt = synthesis::substitute(
        synthesis::substitute(synthesis::response_two_styles_template(), "{instruction}", instruction),
        "{text}", text);
    req.temperature = opts.generation_temperature;
    req.max_tokens = opts.max_tokens;
    req.model_id = opts.model_id;
    return req;
}

backends::ChatRequest render_reasoning(const std::string& instruction, const std::string& text,
                                       const ChatCallOptions& opts) {
    backends::ChatRequest req;
    req.user_prompt = synthesis::substitute(
        synthesis::substitute(synthesis::response_reasoning_template(), "{instruction}", instruction),
        "{text}", text);
    req.temperature = opts.generation_temperature;
    req.max_tokens = opts.max_tokens;
    req.model_id = opts.model_id;
    return req;
}

/// Matches a section header at the start of a line: optional markdown
/// decoration (#, *, >, whitespace), the header word, then an optional
/// colon. Returns the offset where the section content begins, or npos.
size_t find_section_start(const std::string& raw, const std::string& header, size_t from,
                          size_t* header_line_begin) {
    std::string lower = to_lower(raw);
    size_t pos = from;
    while (pos < lower.size()) {
        size_t line_end = lower.find('\n', pos);
        if (line_end == std::string::npos) {
            line_end = lower.size();
        }
        size_t i = pos;
        while (i < line_end && (lower[i] == '#' || lower[i] == '*' || lower[i] == '>' ||
                                lower[i] == ' ' || lower[i] == '\t')) {
            ++i;
        }
        if (lower.compare(i, header.size(), header) == 0) {
            size_t after = i + header.size();
            while (after < line_end && (lower[after] == '*' || lower[after] == ' ')) {
                ++after;
            }
            bool has_colon = after < line_end && lower[after] == ':';
            if (has_colon || after == line_end) {
                if (header_line_begin != nullptr) {
                    *header_line_begin = pos;
                }
                if (has_colon) {
                    ++after;
                }
                while (after < raw.size() && (raw[after] == ' ' || raw[after] == '*')) {
                    ++after;
                }
                return after;
            }
        }
        pos = line_end + 1;
    }
    return std::string::npos;
}

}  // namespace

ReasoningResponse parse_reasoning_sections(const std::string& raw) {
    size_t thought_line = 0;
    size_t thought_start = find_section_start(raw, "thought", 0, &thought_line);
    if (thought_start == std::string::npos) {
        throw SectionsMissing("reply lacks a Thought section");
    }
    size_t summ_line = 0;
    size_t summ_start = find_section_start(raw, "summarization", thought_start, &summ_line);
    if (summ_start == std::string::npos) {
        throw SectionsMissing("reply lacks a Summarization section after Thought");
    }
    ReasoningResponse out;
    out.thought = trim(raw.substr(thought_start, summ_line - thought_start));
    out.summarization = trim(raw.substr(summ_start));
    if (out.thought.empty() || out.summarization.empty()) {
        throw SectionsMissing("reasoning sections are empty");
    }
    out.full_text = raw;
    return out;
}

std::pair<std::string, std::string> generate_common_responses(const std::string& instruction,
                                                              const std::string& source_text,
                                                              backends::ChatBackend& chat,
                                                              const ChatCallOptions& opts,
                                                              int max_parse_retries) {
    std::string last_error = "ParseFailure";
    for (int attempt = 0; attempt <= max_parse_retries; ++attempt) {
        auto resp = chat.complete(render_two_styles(instruction, source_text, opts));
        try {
            json obj = synthesis::extract_first_json_object(resp.text);
            if (!obj.contains("answer1") || !obj.contains("answer2")) {
                throw ParseFailure("reply missing answer1/answer2");
            }
            std::string a1 = trim(obj["answer1"].get<std::string>());
            std::string a2 = trim(obj["answer2"].get<std::string>());
            if (a1.empty() || a2.empty()) {
                throw ParseFailure("answer values must be non-empty");
            }
            return {a1, a2};
        } catch (const ParseFailure& e) {
            last_error = e.what();
        } catch (const json::exception& e) {
            last_error = e.what();
        }
    }
    throw ParseFailure("two-style answers unparseable after retries: " + last_error);
}

std::pair<std::string, double> select_by_reward(const std::string& prompt,
                                                const std::string& answer1,
                                                const std::string& answer2,
                                                backends::RewardBackend& reward) {
    if (answer1.empty() || answer2.empty()) {
        throw Error("select_by_reward: answers must be non-empty");
    }
    double s1 = reward.score(prompt, answer1).scalar;
    double s2 = reward.score(prompt, answer2).scalar;
    double margin = std::fabs(s1 - s2);
    return {s1 >= s2 ? answer1 : answer2, margin};
}

ReasoningResponse generate_reasoning_response(const std::string& instruction,
                                              const std::string& source_text,
                                              backends::ChatBackend& chat,
                                              const ChatCallOptions& opts, int max_parse_retries) {
    std::string last_error;
    for (int attempt = 0; attempt <= max_parse_retries; ++attempt) {
        auto resp = chat.complete(render_reasoning(instruction, source_text, opts));
        try {
            return parse_reasoning_sections(resp.text);
        } catch (const SectionsMissing& e) {
            last_error = e.what();
        }
    }
    throw SectionsMissing("reasoning sections missing after retries: " + last_error);
}

std::vector<DpoSample> build_dpo_pairs(
    const std::vector<ScoredInstruction>& complex_instrs,
    const std::map<std::string, ReasoningResponse>& reasoning_by_id,
    const std::map<std::string, std::string>& ordinary_by_id,
    std::vector<synthesis::RejectEntry>* rejects) {
    std::vector<DpoSample> out;
    for (const auto& instr : complex_instrs) {
        std::string id = instruction_id(instr);
        auto reasoning = reasoning_by_id.find(id);
        auto ordinary = ordinary_by_id.find(id);
        if (reasoning == reasoning_by_id.end() || ordinary == ordinary_by_id.end() ||
            reasoning->second.full_text == ordinary->second) {
            if (rejects != nullptr) {
                rejects->push_back({instr.text_id, "dpo", "MissingCounterpart"});
            }
            continue;
        }
        out.push_back({id, instr.instruction, reasoning->second.full_text, ordinary->second});
    }
    return out;
}

namespace {

struct ItemOutcome {
    std::optional<SftSample> sample;
    std::optional<ReasoningResponse> reasoning;
    std::optional<std::string> ordinary;  // reward-selected counterpart
    std::optional<synthesis::RejectEntry> reject;
};

}  // namespace

ResponseGenResult generate_responses(const std::vector<ScoredInstruction>& filtered,
                                     const std::map<std::string, std::string>& source_texts,
                                     backends::ChatBackend& chat, backends::RewardBackend& reward,
                                     const ChatCallOptions& opts, const ResponseGenPolicy& policy) {
    policy.split.validate();

    std::vector<ItemOutcome> outcomes(filtered.size());
    parallel_for_index(
        filtered.size(), static_cast<size_t>(std::max(1, policy.workers)), [&](size_t i) {
            const ScoredInstruction& instr = filtered[i];
            ItemOutcome& out = outcomes[i];
            auto source = source_texts.find(instr.text_id);
            if (source == source_texts.end()) {
                out.reject = synthesis::RejectEntry{instr.text_id, "responses", "MissingSourceText"};
                return;
            }
            try {
                auto [a1, a2] = generate_common_responses(instr.instruction, source->second, chat,
                                                          opts, policy.max_parse_retries);
                auto [selected, margin] = select_by_reward(instr.instruction, a1, a2, reward);

                SftSample sample;
                sample.id = instruction_id(instr);
                sample.instruction = instr.instruction;
                sample.score = instr.score;
                sample.text_id = instr.text_id;

                if (policy.split.is_complex(instr)) {
                    auto reasoning = generate_reasoning_response(
                        instr.instruction, source->second, chat, opts, policy.max_parse_retries);
                    sample.response = reasoning.full_text;
                    sample.style = SampleStyle::reasoning;
                    out.reasoning = std::move(reasoning);
                    out.ordinary = selected;
                } else {
                    sample.response = selected;
                    sample.style = SampleStyle::ordinary;
                    sample.reward_margin = margin;
                }
                out.sample = std::move(sample);
            } catch (const Error& e) {
                out.reject = synthesis::RejectEntry{instr.text_id, "responses", error_kind(e)};
            }
        });

    ResponseGenResult result;
    std::vector<ScoredInstruction> complex_done;
    std::map<std::string, ReasoningResponse> reasoning_by_id;
    std::map<std::string, std::string> ordinary_by_id;
    for (size_t i = 0; i < outcomes.size(); ++i) {
        auto& out = outcomes[i];
        if (out.reject) {
            result.rejects.push_back(*out.reject);
            continue;
        }
        result.sft.push_back(*out.sample);
        if (out.reasoning) {
            complex_done.push_back(filtered[i]);
            reasoning_by_id.emplace(out.sample->id, std::move(*out.reasoning));
            ordinary_by_id.emplace(out.sample->id, std::move(*out.ordinary));
        }
    }
    result.dpo = build_dpo_pairs(complex_done, reasoning_by_id, ordinary_by_id, &result.rejects);
    return result;
}

}  // namespace medforge::responses
