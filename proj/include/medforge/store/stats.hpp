// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <json.hpp>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "medforge/backends/interfaces.hpp"
#include "medforge/synthesis/synthesis.hpp"

namespace medforge::store {

/// Exact integer statistics for one score axis. The median is the
/// lower-middle element for even n; p25/p75 are the lower nearest-rank
/// elements at indices (n-1)/4 and 3(n-1)/4 of the sorted values, keeping
/// every statistic integral and oracle-exact.
struct AxisStats {
    double mean = 0.0;
    int median = 0;
    int p25 = 0;
    int p75 = 0;
    std::map<int, std::int64_t> histogram;  // every bucket of the axis range
};

struct ScoreStats {
    std::int64_t n = 0;
    std::map<std::string, AxisStats> axes;
};

/// Bucket range for a known axis (quality/difficulty 1..10, relevance 1..6).
std::pair<int, int> axis_range(const std::string& axis);

/// Throws EmptyDataset for n == 0 and MissingAxis when a row lacks a
/// requested axis (or holds a non-integer value).
ScoreStats score_stats(const std::vector<nlohmann::json>& rows,
                       const std::vector<std::string>& axes);

nlohmann::json score_stats_to_json(const ScoreStats& stats);

struct ExternalJudgeResult {
    ScoreStats stats;   // over successfully judged rows
    std::int64_t scored = 0;
    std::int64_t rejects = 0;
};

/// Figure-style cross-dataset comparison: reservoir-samples n rows from an
/// external dataset (field-mapped), scores each instruction with the judge
/// prompt, and returns exact stats plus a reject count.
ExternalJudgeResult judge_external_dataset(const std::vector<nlohmann::json>& rows,
                                           const std::string& instruction_field, std::size_t n,
                                           backends::ChatBackend& chat,
                                           const synthesis::ChatCallOptions& opts,
                                           std::uint64_t seed, int workers);

/// Writes a row-aligned embedding matrix: a header line with the dimension,
/// then one "id<TAB>v1<TAB>...<TAB>vdim" row per input row. Values are
/// printed with round-trip precision so identical vectors serialize
/// identically.
void export_embeddings(const std::vector<nlohmann::json>& rows, const std::string& text_field,
                       const std::string& id_field, backends::EmbedBackend& embed,
                       const std::string& out_path, std::size_t batch_size = 64);

}  // namespace medforge::store
