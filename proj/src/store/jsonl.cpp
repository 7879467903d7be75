// SPDX-License-Identifier: Apache-2.0

#include "medforge/store/jsonl.hpp"

#include <filesystem>
#include <fstream>

#include "medforge/common/errors.hpp"

namespace medforge::store {

using nlohmann::json;

std::vector<json> read_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open dataset: " + path);
    }
    std::vector<json> rows;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        json row = json::parse(line, nullptr, false);
        if (row.is_discarded()) {
            throw Error("malformed JSON line at " + path + ":" + std::to_string(lineno));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_jsonl(const std::string& path, const std::vector<json>& rows) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) {
        std::filesystem::create_directories(p.parent_path());
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw Error("cannot write dataset: " + path);
    }
    for (const auto& row : rows) {
        out << row.dump() << "\n";
    }
    if (!out) {
        throw Error("write failed: " + path);
    }
}

std::int64_t count_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open dataset: " + path);
    }
    std::int64_t n = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) {
            ++n;
        }
    }
    return n;
}

std::string manifest_path_for(const std::string& dataset_path) {
    return dataset_path + ".manifest.json";
}

void write_dataset(const std::string& path, const std::vector<json>& rows,
                   const std::string& kind, std::vector<std::string> created_from,
                   std::optional<std::uint64_t> seed) {
    write_jsonl(path, rows);
    if (count_lines(path) != static_cast<std::int64_t>(rows.size())) {
        throw ManifestMismatch("write verification failed for " + path);
    }
    json manifest{{"path", std::filesystem::path(path).filename().string()},
                  {"kind", kind},
                  {"count", static_cast<std::int64_t>(rows.size())},
                  {"schema_version", 1},
                  {"created_from", created_from}};
    if (seed) {
        manifest["seed"] = *seed;
    } else {
        manifest["seed"] = nullptr;
    }
    std::ofstream out(manifest_path_for(path), std::ios::trunc);
    if (!out) {
        throw Error("cannot write manifest for: " + path);
    }
    out << manifest.dump(2) << "\n";
}

Manifest read_manifest(const std::string& dataset_path) {
    std::ifstream in(manifest_path_for(dataset_path));
    if (!in) {
        throw Error("no manifest for: " + dataset_path);
    }
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) {
        throw Error("malformed manifest for: " + dataset_path);
    }
    Manifest m;
    m.path = j.value("path", std::string());
    m.kind = j.value("kind", std::string());
    m.count = j.value("count", static_cast<std::int64_t>(0));
    m.schema_version = j.value("schema_version", 1);
    for (const auto& d : j.value("created_from", json::array())) {
        m.created_from.push_back(d.get<std::string>());
    }
    if (j.contains("seed") && !j["seed"].is_null()) {
        m.seed = j["seed"].get<std::uint64_t>();
    }
    return m;
}

std::vector<json> open_dataset(const std::string& path) {
    auto rows = read_jsonl(path);
    if (std::filesystem::exists(manifest_path_for(path))) {
        Manifest m = read_manifest(path);
        if (m.count != static_cast<std::int64_t>(rows.size())) {
            throw ManifestMismatch("manifest count " + std::to_string(m.count) + " != physical " +
                                   std::to_string(rows.size()) + " for " + path);
        }
    }
    return rows;
}

}  // namespace medforge::store
