// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <json.hpp>

#include <map>
#include <string>
#include <vector>

#include "medforge/backends/interfaces.hpp"
#include "medforge/responses/responses.hpp"

namespace medforge::taxonomy {

inline constexpr const char* kUnclassified = "Unclassified";
inline constexpr const char* kOtherDepartments = "Other Departments";

struct DeptNode {
    std::string name;
    /// Extra normalized spellings a model may answer with (e.g. the ENT
    /// primary is offered as "Otorhinolaryngology (ENT)" in the prompt).
    std::vector<std::string> aliases;
    std::vector<DeptNode> children;  // empty for leaves
};

/// The department tree: 5 primary medical departments plus the
/// "Other Departments" catch-all, 29 secondary departments in total
/// (8 + 10 + 2 + 2 + 3 under the primaries, 4 under the catch-all).
class TaxonomyTree {
public:
    TaxonomyTree();

    /// The 5 primary departments (the catch-all is not a department).
    const std::vector<DeptNode>& primaries() const { return primaries_; }
    const DeptNode& other_departments() const { return other_; }

    std::size_t primary_count() const { return primaries_.size(); }
    std::size_t secondary_count() const;

    /// All 6 labels valid at the primary level (primaries + catch-all).
    std::vector<std::string> top_level_labels() const;

    bool is_top_level_label(const std::string& name) const;
    const DeptNode* find_top_level(const std::string& name) const;

    /// Child names for a top-level label. Throws Error on unknown labels.
    std::vector<std::string> children_of(const std::string& top_level) const;

    bool is_secondary_of(const std::string& top_level, const std::string& secondary) const;

private:
    std::vector<DeptNode> primaries_;
    DeptNode other_;
};

/// The embedded tree. Counts are checked once on first access.
const TaxonomyTree& load_taxonomy();

struct DeptLabel {
    std::string primary;    // a top-level label
    std::string secondary;  // child of primary, or "Unclassified"
};

/// Normalization applied to model replies before label matching: trim,
/// strip punctuation, case-fold, collapse whitespace. Idempotent.
std::string normalize_label(const std::string& reply);

const std::string& classify_primary_template();
const std::string& classify_secondary_template(const std::string& top_level);

backends::ChatRequest render_primary_prompt(const std::string& instruction,
                                            const std::string& response,
                                            const synthesis::ChatCallOptions& opts);
backends::ChatRequest render_secondary_prompt(const std::string& top_level,
                                              const std::string& instruction,
                                              const std::string& response,
                                              const synthesis::ChatCallOptions& opts);

struct ClassifyPolicy {
    int max_retries = 2;
    int workers = 4;
};

struct PrimaryResult {
    std::string label;
    bool flagged = false;  // true when the fallback was forced
};

struct SecondaryResult {
    std::string label;  // child name or "Unclassified"
    bool flagged = false;
};

/// Stage 1: match the reply against the six top-level labels. Unparseable
/// replies retry; after the budget the sample is routed to
/// "Other Departments" with a flag.
PrimaryResult classify_primary(const responses::SftSample& sample, backends::ChatBackend& chat,
                               const synthesis::ChatCallOptions& opts, int max_retries);

/// Stage 2: match against children(primary) plus "None" (-> Unclassified).
SecondaryResult classify_secondary(const responses::SftSample& sample, const std::string& primary,
                                   backends::ChatBackend& chat,
                                   const synthesis::ChatCallOptions& opts, int max_retries);

struct DistributionReport {
    /// (primary, secondary) -> count; sums to the number of input samples.
    std::map<std::pair<std::string, std::string>, std::int64_t> cells;
    std::int64_t flagged = 0;
};

nlohmann::json distribution_to_json(const DistributionReport& report);

struct ClassifyResult {
    std::vector<responses::SftSample> labeled;
    DistributionReport report;
};

/// Two-stage routing for every sample; stage 2 runs strictly after stage 1
/// for the same sample. Labels are written into primary_dept /
/// secondary_dept.
ClassifyResult classify_corpus(const std::vector<responses::SftSample>& samples,
                               backends::ChatBackend& chat,
                               const synthesis::ChatCallOptions& opts,
                               const ClassifyPolicy& policy);

}  // namespace medforge::taxonomy
