// SPDX-License-Identifier: Apache-2.0

#include "medforge/store/sampling.hpp"

#include <cmath>
#include <unordered_set>

#include "medforge/common/digest.hpp"
#include "medforge/common/errors.hpp"
#include "medforge/taxonomy/taxonomy.hpp"

namespace medforge::store {

bool StageSelector::matches(const responses::SftSample& s) const {
    switch (kind) {
        case Kind::whole:
            return true;
        case Kind::primary_dept:
            return s.primary_dept == name;
        case Kind::secondary_dept:
            return s.secondary_dept == name;
    }
    return false;
}

std::string StageSelector::to_string() const {
    switch (kind) {
        case Kind::whole:
            return "whole";
        case Kind::primary_dept:
            return "primary_dept=" + name;
        case Kind::secondary_dept:
            return "secondary_dept=" + name;
    }
    return "whole";
}

StageSelector parse_selector(const std::string& text) {
    if (text == "whole") {
        return {StageSelector::Kind::whole, ""};
    }
    const auto& tree = taxonomy::load_taxonomy();
    if (text.rfind("primary_dept=", 0) == 0) {
        std::string name = text.substr(std::string("primary_dept=").size());
        if (!tree.is_top_level_label(name)) {
            throw ConfigError("selector names unknown primary department: " + name);
        }
        return {StageSelector::Kind::primary_dept, name};
    }
    if (text.rfind("secondary_dept=", 0) == 0) {
        std::string name = text.substr(std::string("secondary_dept=").size());
        bool known = false;
        for (const auto& top : tree.top_level_labels()) {
            if (tree.is_secondary_of(top, name)) {
                known = true;
                break;
            }
        }
        if (!known) {
            throw ConfigError("selector names unknown secondary department: " + name);
        }
        return {StageSelector::Kind::secondary_dept, name};
    }
    throw ConfigError("unparseable stage selector: " + text);
}

void StagePlan::validate() const {
    if (stages.empty()) {
        throw ConfigError("stage plan must contain at least one stage");
    }
    for (const auto& stage : stages) {
        if (stage.n < 1) {
            throw ConfigError("stage n must be >= 1");
        }
    }
}

std::vector<std::vector<responses::SftSample>> build_stage_splits(
    const std::vector<responses::SftSample>& pool, const StagePlan& plan) {
    plan.validate();
    std::vector<std::vector<responses::SftSample>> out;
    out.reserve(plan.stages.size());
    std::unordered_set<std::string> used_ids;

    for (std::size_t i = 0; i < plan.stages.size(); ++i) {
        const Stage& stage = plan.stages[i];
        std::vector<responses::SftSample> eligible;
        for (const auto& s : pool) {
            if (!stage.selector.matches(s)) {
                continue;
            }
            if (plan.overlap == Overlap::disjoint && used_ids.count(s.id) != 0) {
                continue;
            }
            eligible.push_back(s);
        }
        if (plan.overlap == Overlap::disjoint &&
            static_cast<std::int64_t>(eligible.size()) < stage.n) {
            throw InsufficientPool("stage " + std::to_string(i + 1) + " (" +
                                   stage.selector.to_string() + ") needs " +
                                   std::to_string(stage.n) + " but only " +
                                   std::to_string(eligible.size()) + " remain");
        }
        auto picked = reservoir_sample(eligible, static_cast<std::size_t>(stage.n),
                                       derive_seed(plan.seed, "stage", i));
        if (plan.overlap == Overlap::disjoint) {
            for (const auto& s : picked) {
                used_ids.insert(s.id);
            }
        }
        out.push_back(std::move(picked));
    }
    return out;
}

std::pair<std::vector<responses::SftSample>, std::vector<responses::SftSample>>
split_reasoning_for_sft_and_dpo(const std::vector<responses::SftSample>& reasoning,
                                double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0)) {
        throw ConfigError("reasoning split fraction must lie in (0, 1)");
    }
    std::vector<responses::SftSample> shuffled = reasoning;
    DetRng rng(seed);
    rng.shuffle(shuffled);
    // round half up keeps the SFT half the larger one for odd counts
    std::size_t k = static_cast<std::size_t>(
        std::floor(fraction * static_cast<double>(shuffled.size()) + 0.5));
    std::vector<responses::SftSample> sft_half(shuffled.begin(),
                                               shuffled.begin() + static_cast<std::ptrdiff_t>(k));
    std::vector<responses::SftSample> dpo_half(shuffled.begin() + static_cast<std::ptrdiff_t>(k),
                                               shuffled.end());
    return {std::move(sft_half), std::move(dpo_half)};
}

}  // namespace medforge::store
