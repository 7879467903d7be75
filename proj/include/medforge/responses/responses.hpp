// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <json.hpp>

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "medforge/backends/interfaces.hpp"
#include "medforge/filtering/filtering.hpp"
#include "medforge/synthesis/synthesis.hpp"

namespace medforge::responses {

using synthesis::ChatCallOptions;
using synthesis::ScoreCard;
using synthesis::ScoredInstruction;

struct SplitPolicy {
    /// difficulty >= threshold routes an instruction to the long-form
    /// reasoning path. The boundary is inclusive: maximal-difficulty items
    /// always receive reasoning treatment.
    int complexity_threshold = 8;

    void validate() const;
    bool is_complex(const ScoredInstruction& s) const {
        return s.score.difficulty >= complexity_threshold;
    }
};

enum class SampleStyle { ordinary, reasoning };

const char* sample_style_name(SampleStyle style);
SampleStyle sample_style_from_name(const std::string& name);

struct SftSample {
    std::string id;
    std::string instruction;
    std::string response;
    SampleStyle style = SampleStyle::ordinary;
    ScoreCard score;
    std::string primary_dept;    // empty = unset
    std::string secondary_dept;  // empty = unset
    std::string text_id;
    std::optional<double> reward_margin;  // present iff style == ordinary
};

struct DpoSample {
    std::string id;
    std::string prompt;
    std::string chosen;    // long-form reasoning full text
    std::string rejected;  // reward-selected ordinary response
};

struct ReasoningResponse {
    std::string thought;
    std::string summarization;
    std::string full_text;
};

void to_json(nlohmann::json& j, const SftSample& s);
void from_json(const nlohmann::json& j, SftSample& s);
void to_json(nlohmann::json& j, const DpoSample& s);
void from_json(const nlohmann::json& j, DpoSample& s);

/// Exhaustive, disjoint partition into (common, complex).
std::pair<std::vector<ScoredInstruction>, std::vector<ScoredInstruction>> split_by_complexity(
    const std::vector<ScoredInstruction>& instrs, const SplitPolicy& policy);

/// Two stylistically distinct answers for a common instruction; parses
/// {"answer1","answer2"} with the shared lenient extractor. Retries with a
/// fresh generation up to max_parse_retries; throws ParseFailure after.
std::pair<std::string, std::string> generate_common_responses(const std::string& instruction,
                                                              const std::string& source_text,
                                                              backends::ChatBackend& chat,
                                                              const ChatCallOptions& opts,
                                                              int max_parse_retries);

/// Reward argmax over the two candidates. Exact tie selects answer1,
/// keeping selection deterministic and order-stable.
std::pair<std::string, double> select_by_reward(const std::string& prompt,
                                                const std::string& answer1,
                                                const std::string& answer2,
                                                backends::RewardBackend& reward);

/// Splits a reply into Thought / Summarization sections by case-insensitive
/// header match (plain, markdown-heading, or bold headers). Throws
/// SectionsMissing when either header is absent after retries.
ReasoningResponse parse_reasoning_sections(const std::string& raw);

ReasoningResponse generate_reasoning_response(const std::string& instruction,
                                              const std::string& source_text,
                                              backends::ChatBackend& chat,
                                              const ChatCallOptions& opts, int max_parse_retries);

/// Joins reasoning and ordinary responses per complex instruction id:
/// chosen = reasoning full text, rejected = ordinary. Instructions missing
/// either side are skipped and reported.
std::vector<DpoSample> build_dpo_pairs(
    const std::vector<ScoredInstruction>& complex_instrs,
    const std::map<std::string, ReasoningResponse>& reasoning_by_id,
    const std::map<std::string, std::string>& ordinary_by_id,
    std::vector<synthesis::RejectEntry>* rejects);

struct ResponseGenPolicy {
    SplitPolicy split;
    int max_parse_retries = 2;
    int workers = 4;
};

struct ResponseGenResult {
    std::vector<SftSample> sft;  // one sample per surviving instruction, in input order
    std::vector<DpoSample> dpo;  // one pair per completed complex instruction, in input order
    std::vector<synthesis::RejectEntry> rejects;
};

/// Stable sample id for a scored instruction (text id + slot).
std::string instruction_id(const ScoredInstruction& s);

/// End-to-end response stage: splits at the complexity threshold, runs the
/// two-answer + reward path for common instructions, the long-form path
/// (plus an ordinary counterpart) for complex ones, and assembles DPO
/// pairs. source_texts maps text_id to the original document, which both
/// response templates embed.
ResponseGenResult generate_responses(const std::vector<ScoredInstruction>& filtered,
                                     const std::map<std::string, std::string>& source_texts,
                                     backends::ChatBackend& chat, backends::RewardBackend& reward,
                                     const ChatCallOptions& opts, const ResponseGenPolicy& policy);

}  // namespace medforge::responses
