// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "medforge/common/rng.hpp"
#include "medforge/responses/responses.hpp"

namespace medforge::store {

/// Single-pass uniform without-replacement sample of min(n, stream size)
/// items (algorithm R). Deterministic for a given seed.
template <typename T>
std::vector<T> reservoir_sample(const std::vector<T>& stream, std::size_t n, std::uint64_t seed) {
    DetRng rng(seed);
    std::vector<T> reservoir;
    reservoir.reserve(n < stream.size() ? n : stream.size());
    for (std::size_t i = 0; i < stream.size(); ++i) {
        if (reservoir.size() < n) {
            reservoir.push_back(stream[i]);
        } else {
            std::uint64_t j = rng.below(i + 1);
            if (j < n) {
                reservoir[static_cast<std::size_t>(j)] = stream[i];
            }
        }
    }
    return reservoir;
}

struct StageSelector {
    enum class Kind { whole, primary_dept, secondary_dept };
    Kind kind = Kind::whole;
    std::string name;  // department for the dept kinds

    bool matches(const responses::SftSample& s) const;
    std::string to_string() const;
};

/// Parses "whole", "primary_dept=<name>" or "secondary_dept=<name>" and
/// validates department names against the taxonomy.
StageSelector parse_selector(const std::string& text);

struct Stage {
    StageSelector selector;
    std::int64_t n = 1;
};

enum class Overlap { independent, disjoint };

/// Ordered broad-to-narrow (or any) sampling scheme over a labeled SFT
/// pool. A reversed plan expresses the reversed-stages ablation; a
/// single-stage plan expresses the direct ablation.
struct StagePlan {
    std::vector<Stage> stages;
    std::uint64_t seed = 0;
    Overlap overlap = Overlap::independent;

    void validate() const;
};

/// Draws each stage by its selector with a per-stage derived seed.
/// independent: plain reservoir sampling from the full matching pool
/// (min(n, pool) semantics). disjoint: earlier stages' ids are removed
/// from later pools and a short pool raises InsufficientPool.
std::vector<std::vector<responses::SftSample>> build_stage_splits(
    const std::vector<responses::SftSample>& pool, const StagePlan& plan);

/// Deterministic disjoint partition of the reasoning set: the first
/// round(fraction * N) shuffled samples (round half up) go to the SFT
/// half, the rest to the DPO half.
std::pair<std::vector<responses::SftSample>, std::vector<responses::SftSample>>
split_reasoning_for_sft_and_dpo(const std::vector<responses::SftSample>& reasoning,
                                double fraction, std::uint64_t seed);

}  // namespace medforge::store
