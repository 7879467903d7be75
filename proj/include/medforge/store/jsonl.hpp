// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace medforge::store {

std::vector<nlohmann::json> read_jsonl(const std::string& path);
void write_jsonl(const std::string& path, const std::vector<nlohmann::json>& rows);
std::int64_t count_lines(const std::string& path);

template <typename T>
std::vector<T> read_jsonl_as(const std::string& path) {
    std::vector<T> out;
    for (const auto& row : read_jsonl(path)) {
        out.push_back(row.template get<T>());
    }
    return out;
}

template <typename T>
std::vector<nlohmann::json> to_rows(const std::vector<T>& records) {
    std::vector<nlohmann::json> rows;
    rows.reserve(records.size());
    for (const auto& r : records) {
        rows.push_back(nlohmann::json(r));
    }
    return rows;
}

/// Sidecar metadata for a dataset file, stored at <path>.manifest.json.
/// count always equals the physical line count; created_from digests chain
/// outputs back to their inputs (acyclic lineage by construction).
struct Manifest {
    std::string path;  // dataset file name (no directory; keeps runs relocatable)
    std::string kind;  // raw | scored | sft | dpo
    std::int64_t count = 0;
    int schema_version = 1;
    std::vector<std::string> created_from;
    std::optional<std::uint64_t> seed;
};

std::string manifest_path_for(const std::string& dataset_path);

/// Writes rows then the sidecar manifest; count is the row count.
void write_dataset(const std::string& path, const std::vector<nlohmann::json>& rows,
                   const std::string& kind, std::vector<std::string> created_from,
                   std::optional<std::uint64_t> seed);

Manifest read_manifest(const std::string& dataset_path);

/// Reads a dataset; when a sidecar manifest exists the physical line count
/// is checked against it (ManifestMismatch on disagreement).
std::vector<nlohmann::json> open_dataset(const std::string& path);

}  // namespace medforge::store
