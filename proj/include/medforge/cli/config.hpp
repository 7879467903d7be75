// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <json.hpp>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "medforge/backends/mock.hpp"
#include "medforge/backends/types.hpp"
#include "medforge/filtering/filtering.hpp"
#include "medforge/responses/responses.hpp"
#include "medforge/store/sampling.hpp"
#include "medforge/synthesis/synthesis.hpp"

namespace medforge::cli {

/// File locations. Inputs may be shared between commands; all output
/// locations must be pairwise distinct.
struct Paths {
    std::string corpus;
    std::string scored;
    std::string rejects;
    std::string filtered;
    std::string attrition;
    std::string sft;
    std::string dpo;
    std::string response_rejects;
    std::string labeled;
    std::string distribution;
    std::string stages_dir;
    std::string reasoning_sft;
    std::string reasoning_dpo;
    std::string stats;
    std::string embeddings;
    std::string external;
    std::string external_report;
    std::string benchmark;
    std::string episodes;
    std::string eval_report;
};

struct TrainerSettings {
    backends::BackendConfig backend;
    backends::MockTrainerMode mock_mode = backends::MockTrainerMode::echo;
    std::map<std::string, std::string> hyperparams;
};

struct AnalyzeSettings {
    std::vector<std::string> axes{"quality", "difficulty", "relevance"};
    std::string external_instruction_field = "instruction";
    std::int64_t judge_sample_n = 50;
    std::string embed_text_field = "instruction";
    std::string embed_id_field = "id";
};

struct TttSettings {
    bool enabled = true;
    int runs = 3;
    int shots = 3;
    bool query_includes_options = true;
    int top_k = 1;
    std::uint64_t seed = 0;
};

/// The single declarative run configuration. Every CLI flag overrides one
/// of these keys. Unknown keys anywhere are a ConfigError.
struct RunConfig {
    std::uint64_t seed = 0;
    Paths paths;
    backends::BackendConfig chat;
    backends::BackendConfig embed;
    backends::BackendConfig reward;
    TrainerSettings trainer;
    synthesis::SynthesisPolicy synthesis_policy;
    filtering::FilterPolicy filter;
    responses::ResponseGenPolicy responses_policy;
    int taxonomy_max_retries = 2;
    int taxonomy_workers = 4;
    store::StagePlan stage_plan;
    double reasoning_fraction = 0.5;
    std::uint64_t reasoning_seed = 0;
    AnalyzeSettings analyze;
    TttSettings ttt;
    synthesis::ChatCallOptions chat_call_options() const;
};

/// Parses and validates a config document; throws ConfigError on unknown
/// keys, bad types, or violated invariants. Sub-seeds not given explicitly
/// are derived from the global seed per role.
RunConfig parse_run_config(const nlohmann::json& doc);

RunConfig load_run_config(const std::string& path);

/// Applies a dotted-path override ("backends.chat.cache_mode=replay") onto
/// a raw config document. Values parse as JSON scalars when possible and
/// fall back to strings.
void apply_override(nlohmann::json& doc, const std::string& assignment);

}  // namespace medforge::cli
