// SPDX-License-Identifier: Apache-2.0

#include "medforge/filtering/filtering.hpp"

#include <algorithm>

#include "medforge/common/errors.hpp"

namespace medforge::filtering {

using nlohmann::json;

const char* filter_reason_name(FilterReason reason) {
    switch (reason) {
        case FilterReason::details_asymmetry:
            return "details_asymmetry";
        case FilterReason::both_detailed:
            return "both_detailed";
        case FilterReason::sum3:
            return "sum3";
        case FilterReason::sum2:
            return "sum2";
        case FilterReason::quality_only:
            return "quality_only";
        case FilterReason::random_tie:
            return "random_tie";
    }
    return "unknown";
}

void FilterPolicy::validate() const {
    if (min_quality < 0 || min_quality > 10 || min_difficulty < 0 || min_difficulty > 10 ||
        min_relevance < 0 || min_relevance > 6) {
        throw ConfigError("filter gates must lie within their score ranges");
    }
}

bool FilterPolicy::passes_gates(const ScoredInstruction& s) const {
    if (min_quality > 0 && s.score.quality < min_quality) return false;
    if (min_difficulty > 0 && s.score.difficulty < min_difficulty) return false;
    if (min_relevance > 0 && s.score.relevance < min_relevance) return false;
    return true;
}

FilterOutcome compare_instruction_score(const ScoredInstruction& a, const ScoredInstruction& b,
                                        DetRng& rng) {
    if (a.text_id != b.text_id) {
        throw MismatchedPair("compare_instruction_score: text ids differ: " + a.text_id + " vs " +
                             b.text_id);
    }

    if (a.score.mentions_details != b.score.mentions_details) {
        if (a.score.mentions_details) {
            return {b, FilterReason::details_asymmetry};
        }
        return {a, FilterReason::details_asymmetry};
    }
    if (a.score.mentions_details && b.score.mentions_details) {
        return {std::nullopt, FilterReason::both_detailed};
    }

    int sum3_a = a.score.quality + a.score.difficulty + a.score.relevance;
    int sum3_b = b.score.quality + b.score.difficulty + b.score.relevance;
    if (sum3_a != sum3_b) {
        return {sum3_a > sum3_b ? a : b, FilterReason::sum3};
    }

    int sum2_a = a.score.quality + a.score.difficulty;
    int sum2_b = b.score.quality + b.score.difficulty;
    if (sum2_a != sum2_b) {
        return {sum2_a > sum2_b ? a : b, FilterReason::sum2};
    }

    if (a.score.quality != b.score.quality) {
        return {a.score.quality > b.score.quality ? a : b, FilterReason::quality_only};
    }

    return {rng.below(2) == 0 ? a : b, FilterReason::random_tie};
}

void to_json(json& j, const AttritionReport& r) {
    j = json{{"total_groups", r.total_groups},
             {"total_pairs", r.total_pairs},
             {"singletons", r.singletons},
             {"winners", r.winners},
             {"dropped_by_gate", r.dropped_by_gate},
             {"malformed_groups", r.malformed_groups},
             {"per_reason", r.per_reason}};
}

FilterResult filter_corpus(const std::vector<ScoredInstruction>& scored,
                           const FilterPolicy& policy) {
    policy.validate();

    // Group by text_id, then process groups in sorted order: the tie rng
    // consumes draws in text_id sort order by contract.
    std::map<std::string, std::vector<ScoredInstruction>> groups;
    for (const auto& s : scored) {
        groups[s.text_id].push_back(s);
    }

    FilterResult result;
    result.report.total_groups = static_cast<std::int64_t>(groups.size());
    DetRng rng(policy.rng_seed);

    auto admit = [&](const ScoredInstruction& winner) {
        if (policy.passes_gates(winner)) {
            result.winners.push_back(winner);
            ++result.report.winners;
        } else {
            ++result.report.dropped_by_gate;
        }
    };

    for (auto& [text_id, group] : groups) {
        if (group.size() == 1) {
            ++result.report.singletons;
            // Algorithm-consistent singleton rule: a lone detailed
            // instruction is unanswerable out of context and is dropped.
            if (group[0].score.mentions_details) {
                ++result.report.per_reason["singleton_dropped"];
            } else {
                ++result.report.per_reason["singleton_kept"];
                admit(group[0]);
            }
            continue;
        }
        if (group.size() != 2) {
            ++result.report.malformed_groups;
            continue;
        }
        std::sort(group.begin(), group.end(),
                  [](const ScoredInstruction& x, const ScoredInstruction& y) { return x.slot < y.slot; });
        ++result.report.total_pairs;
        FilterOutcome outcome = compare_instruction_score(group[0], group[1], rng);
        ++result.report.per_reason[filter_reason_name(outcome.reason)];
        if (outcome.winner) {
            admit(*outcome.winner);
        }
    }
    return result;
}

}  // namespace medforge::filtering
