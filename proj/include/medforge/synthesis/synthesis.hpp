// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <json.hpp>

#include <string>
#include <vector>

#include "medforge/backends/interfaces.hpp"
#include "medforge/synthesis/prompts.hpp"

namespace medforge::synthesis {

/// One corpus document, the unit instruction generation consumes.
struct RawText {
    std::string id;
    std::string text;
    std::string source;
};

struct InstructionPair {
    std::string text_id;
    std::string question1;
    std::string question2;
};

/// Four-axis judge card. difficulty is the canonical field; downstream
/// "complexity" is an alias for it.
struct ScoreCard {
    int quality = 0;       // 1..10
    int difficulty = 0;    // 1..10
    int relevance = 0;     // 1..6
    bool mentions_details = false;

    bool in_range() const {
        return quality >= 1 && quality <= 10 && difficulty >= 1 && difficulty <= 10 &&
               relevance >= 1 && relevance <= 6;
    }
};

struct ScoredInstruction {
    std::string text_id;
    int slot = 1;  // 1 or 2
    std::string instruction;
    ScoreCard score;
};

struct RejectEntry {
    std::string text_id;
    std::string stage;   // "generation" | "scoring"
    std::string reason;  // error kind, e.g. "ParseFailure"
};

struct SynthesisPolicy {
    /// Extra full attempts (fresh generation) after a parse/score failure.
    int max_parse_retries = 2;
    int workers = 4;
};

struct SynthesisResult {
    std::vector<ScoredInstruction> instructions;
    std::vector<RejectEntry> rejects;
};

void to_json(nlohmann::json& j, const RawText& t);
void from_json(const nlohmann::json& j, RawText& t);
void to_json(nlohmann::json& j, const ScoredInstruction& s);
void from_json(const nlohmann::json& j, ScoredInstruction& s);
void to_json(nlohmann::json& j, const RejectEntry& r);

/// Renders the instruction-generation prompt with {text} substituted
/// verbatim; sampling temperature applies (generation-style call).
backends::ChatRequest render_instruction_prompt(const RawText& text, const ChatCallOptions& opts);

/// Renders the scoring prompt for one instruction; greedy decoding.
backends::ChatRequest render_score_prompt(const std::string& instruction,
                                          const ChatCallOptions& opts);

/// Pulls {"question1","question2"} out of a model reply. Throws
/// ParseFailure (no object / missing key / empty value) or
/// DuplicateQuestions (equal after whitespace/case normalization).
InstructionPair parse_instruction_pair(const std::string& raw, const std::string& text_id);

/// Parses the judge reply into a ScoreCard. Key lookup is case-insensitive
/// and accepts the "complexity" alias for difficulty; booleans may be JSON
/// booleans or "True"/"False" strings. Values outside the rubric ranges
/// raise RangeViolation.
ScoreCard parse_score_card(const std::string& raw);

/// Full generation+scoring pass over a corpus. Per text: one generation
/// call, then one scoring call per instruction; any parse/score failure
/// restarts the text with a fresh generation, up to
/// policy.max_parse_retries extra attempts, after which the text lands in
/// the rejects log. Output order follows input order regardless of
/// completion order. Backend transport errors reject the text immediately
/// (the transport already retried).
SynthesisResult synthesize_instructions(const std::vector<RawText>& corpus,
                                        backends::ChatBackend& chat, const ChatCallOptions& opts,
                                        const SynthesisPolicy& policy);

}  // namespace medforge::synthesis
