// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "medforge/backends/types.hpp"

namespace medforge::synthesis {

/// Sampling defaults: generation-style calls sample at 0.7, judge-style
/// calls (scoring, classification) decode greedily for stability.
inline constexpr double kGenerationTemperature = 0.7;
inline constexpr double kJudgeTemperature = 0.0;

/// Knobs threaded into every rendered ChatRequest.
struct ChatCallOptions {
    std::string model_id;
    int max_tokens = 1024;
    double generation_temperature = kGenerationTemperature;
    double judge_temperature = kJudgeTemperature;
};

// Embedded prompt templates. Each is byte-identical to its counterpart
// under resources/prompts/ (enforced by a golden-file test). Placeholders
// {text} and {instruction} are substituted verbatim.
const std::string& instruction_generation_template();
const std::string& instruction_scoring_template();
const std::string& response_two_styles_template();
const std::string& response_reasoning_template();

/// Replaces every occurrence of placeholder in tpl.
std::string substitute(std::string tpl, const std::string& placeholder, const std::string& value);

}  // namespace medforge::synthesis
