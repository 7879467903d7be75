// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>

namespace medforge {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

/// Collapses runs of whitespace to single spaces and trims the ends.
std::string collapse_whitespace(std::string_view s);

/// Identifies the name of a thrown pipeline error ("ParseFailure",
/// "TransportError", ...) for rejects logs and reports.
std::string error_kind(const std::exception& e);

}  // namespace medforge
