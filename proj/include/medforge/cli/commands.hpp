// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "medforge/cli/config.hpp"

namespace medforge::cli {

void cmd_generate_instructions(const RunConfig& cfg);
void cmd_filter(const RunConfig& cfg);
void cmd_generate_responses(const RunConfig& cfg);
void cmd_classify(const RunConfig& cfg);
void cmd_analyze(const RunConfig& cfg);
void cmd_build_stages(const RunConfig& cfg);
void cmd_ttt_eval(const RunConfig& cfg);

/// generate-instructions -> filter -> generate-responses -> classify ->
/// build-stages, sharing the stage commands' code paths so a pipeline run
/// and stage-wise runs produce identical bytes.
void cmd_pipeline(const RunConfig& cfg);

/// Parses arguments (without the program name) and dispatches. Exit codes:
/// 0 success, 1 contract breach, 2 configuration error.
int run_cli(const std::vector<std::string>& args);

}  // namespace medforge::cli
