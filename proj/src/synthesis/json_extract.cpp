// SPDX-License-Identifier: Apache-2.0

#include "medforge/synthesis/json_extract.hpp"

#include "medforge/common/errors.hpp"

namespace medforge::synthesis {

using nlohmann::json;

namespace {

/// Returns the index one past the matching close brace, or npos when the
/// object starting at `open` never balances. Tracks string state so braces
/// inside string values do not confuse the count.
size_t find_balanced_end(const std::string& s, size_t open) {
    int depth = 0;
    bool in_string = false;
    for (size_t i = open; i < s.size(); ++i) {
        char c = s[i];
        if (in_string) {
            if (c == '\\') {
                ++i;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
        } else if (c == '{') {
            ++depth;
        } else if (c == '}') {
            --depth;
            if (depth == 0) {
                return i + 1;
            }
        }
    }
    return std::string::npos;
}

}  // namespace

json extract_first_json_object(const std::string& raw) {
    size_t pos = raw.find('{');
    while (pos != std::string::npos) {
        size_t end = find_balanced_end(raw, pos);
        if (end == std::string::npos) {
            break;
        }
        json parsed = json::parse(raw.substr(pos, end - pos), nullptr, false);
        if (!parsed.is_discarded() && parsed.is_object()) {
            return parsed;
        }
        pos = raw.find('{', pos + 1);
    }
    throw ParseFailure("no well-formed JSON object in reply");
}

}  // namespace medforge::synthesis
