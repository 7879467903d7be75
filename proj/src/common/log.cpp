// SPDX-License-Identifier: Apache-2.0

#include "medforge/common/log.hpp"

#include <iostream>
#include <mutex>

namespace medforge {

namespace {
std::mutex g_log_mutex;
}

void log_line(const std::string& level, const std::string& event, nlohmann::json fields) {
    nlohmann::json rec = std::move(fields);
    rec["level"] = level;
    rec["event"] = event;
    std::lock_guard<std::mutex> lock(g_log_mutex);
    std::cerr << rec.dump() << "\n";
}

}  // namespace medforge
