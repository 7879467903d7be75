// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <json.hpp>

#include <string>

namespace medforge {

/// Structured JSON-lines logging on standard error. Fields are caller
/// supplied; no wall-clock fields are emitted so logs stay diffable.
void log_line(const std::string& level, const std::string& event, nlohmann::json fields = {});

inline void log_info(const std::string& event, nlohmann::json fields = {}) {
    log_line("info", event, std::move(fields));
}

inline void log_warn(const std::string& event, nlohmann::json fields = {}) {
    log_line("warn", event, std::move(fields));
}

inline void log_error(const std::string& event, nlohmann::json fields = {}) {
    log_line("error", event, std::move(fields));
}

}  // namespace medforge
