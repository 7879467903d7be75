// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <json.hpp>

#include <string>

namespace medforge::synthesis {

/// Extracts the first well-formed JSON object embedded in a model reply,
/// tolerating surrounding prose and markdown code fences. Lenient on
/// wrapping, strict on content: the object itself must parse cleanly.
/// Throws ParseFailure when no object is found.
nlohmann::json extract_first_json_object(const std::string& raw);

}  // namespace medforge::synthesis
