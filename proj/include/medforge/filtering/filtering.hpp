// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "medforge/common/rng.hpp"
#include "medforge/synthesis/synthesis.hpp"

namespace medforge::filtering {

using synthesis::ScoredInstruction;

enum class FilterReason {
    details_asymmetry,  // exactly one mentioned source details; the other wins
    both_detailed,      // both mentioned details; neither survives
    sum3,               // quality + difficulty + relevance decided
    sum2,               // quality + difficulty decided
    quality_only,       // quality decided
    random_tie,         // full tie; seeded uniform choice
};

const char* filter_reason_name(FilterReason reason);

struct FilterOutcome {
    std::optional<ScoredInstruction> winner;  // empty iff reason == both_detailed
    FilterReason reason = FilterReason::sum3;
};

struct FilterPolicy {
    int min_quality = 0;     // 0 disables the gate
    int min_difficulty = 0;  // 0 disables
    int min_relevance = 0;   // 0 disables
    std::uint64_t rng_seed = 0;

    void validate() const;
    bool passes_gates(const ScoredInstruction& s) const;
};

struct AttritionReport {
    std::int64_t total_groups = 0;
    std::int64_t total_pairs = 0;
    std::int64_t singletons = 0;
    std::int64_t winners = 0;
    std::int64_t dropped_by_gate = 0;
    std::int64_t malformed_groups = 0;
    std::map<std::string, std::int64_t> per_reason;
};

void to_json(nlohmann::json& j, const AttritionReport& r);

struct FilterResult {
    std::vector<ScoredInstruction> winners;
    AttritionReport report;
};

/// Picks at most one instruction of a same-text pair:
///   (i)   exactly one mentions details -> the other one wins;
///   (ii)  both mention details -> none;
///   (iii) higher quality+difficulty+relevance wins;
///   (iv)  tie: higher quality+difficulty wins;
///   (v)   tie: higher quality wins;
///   (vi)  full tie: one uniform draw from rng decides (0 -> a, 1 -> b).
/// Throws MismatchedPair when the records name different source texts.
FilterOutcome compare_instruction_score(const ScoredInstruction& a, const ScoredInstruction& b,
                                        DetRng& rng);

/// Resolves every text_id group. Pairs go through
/// compare_instruction_score; singletons survive iff they do not mention
/// details; enabled gates then drop low-scoring winners. Groups are
/// processed in text_id sort order so tie draws are independent of input
/// interleaving, and winners are emitted in that order. Groups with more
/// than two slots are counted malformed and skipped.
FilterResult filter_corpus(const std::vector<ScoredInstruction>& scored,
                           const FilterPolicy& policy);

}  // namespace medforge::filtering
