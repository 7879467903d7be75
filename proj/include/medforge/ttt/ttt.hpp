// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "medforge/backends/interfaces.hpp"
#include "medforge/responses/responses.hpp"

namespace medforge::ttt {

/// Immutable row-aligned retrieval index over the long-form reasoning
/// subset. Each row keeps the (prompt, response) payload used as the
/// single-instance training job.
struct RetrievalIndex {
    std::vector<std::string> ids;
    std::vector<backends::EmbeddingVector> vectors;
    std::vector<std::pair<std::string, std::string>> payloads;  // (prompt, response)
    std::size_t dim = 0;

    std::size_t size() const { return ids.size(); }

    /// Content digest (ids + vector values); identical inputs and backend
    /// produce identical digests.
    std::string digest() const;
};

/// Embeds the instruction field of every sample. Samples must be non-empty.
RetrievalIndex build_index(const std::vector<responses::SftSample>& samples,
                           backends::EmbedBackend& embed, std::size_t batch_size = 64);

/// Exhaustive argmax of cosine similarity; ties resolve to the
/// lexicographically lowest id. Throws DimensionMismatch on dim mismatch
/// and DegenerateVector when the query or a row has zero norm.
std::pair<std::string, double> retrieve_top1(const RetrievalIndex& index,
                                             const backends::EmbeddingVector& query);

/// Top-k neighbors ordered by descending similarity (same tie rule).
/// k = 1 reproduces retrieve_top1; larger k is an ablation knob.
std::vector<std::pair<std::string, double>> retrieve_top_k(const RetrievalIndex& index,
                                                           const backends::EmbeddingVector& query,
                                                           std::size_t k);

/// Audit record of one retrieve->train->infer->restore episode. restored
/// is true in every persisted episode; a restore failure aborts the whole
/// run instead of producing a record.
struct TttEpisode {
    std::string question_id;
    std::string query;
    std::string retrieved_id;
    double similarity = 0.0;
    bool trained = false;
    std::string answer;
    bool restored = false;
    std::string error;  // empty when the episode succeeded
};

void to_json(nlohmann::json& j, const TttEpisode& e);

struct EpisodeOptions {
    std::map<std::string, std::string> hyperparams;
    /// Number of retrieved instances to train on. The default follows the
    /// single-most-similar-instance reading; >1 is an ablation.
    std::size_t top_k = 1;
};

/// One TTT episode: embed the query, retrieve the most similar instance(s),
/// train on them, answer the prompt, restore. Restore executes on every
/// path, including after stage errors; the session comes back clean.
TttEpisode run_episode(const std::string& question_id, const std::string& query_text,
                       const std::string& prompt, const RetrievalIndex& index,
                       backends::EmbedBackend& embed, backends::TrainerBackend& trainer,
                       backends::TrainerSession& session, const EpisodeOptions& opts);

struct BenchmarkItem {
    std::string question_id;
    std::string stem;
    std::vector<std::pair<std::string, std::string>> options;  // (letter, text)
    std::string gold;

    /// letters consecutive from 'A'; gold among them
    void validate() const;
    std::vector<std::string> letters() const;
};

void to_json(nlohmann::json& j, const BenchmarkItem& item);
void from_json(const nlohmann::json& j, BenchmarkItem& item);

/// Few-shot prompt: each exemplar rendered as Question / Options /
/// "Answer: <letter>", then the target with a trailing open "Answer:".
/// The target's gold never appears.
std::string render_fewshot_prompt(const BenchmarkItem& item,
                                  const std::vector<BenchmarkItem>& exemplars);

/// Choice extraction rule (isolated here so alternates stay swappable):
/// first "Answer: X" occurrence with a valid letter wins; otherwise the
/// last standalone uppercase valid letter token; otherwise nothing
/// (scored incorrect).
std::optional<std::string> extract_choice(const std::string& output,
                                          const std::vector<std::string>& valid_letters);

struct BenchmarkOptions {
    int runs = 3;
    int shots = 3;
    bool ttt = true;
    std::uint64_t seed = 0;
    bool query_includes_options = true;
    std::map<std::string, std::string> hyperparams;
    std::size_t top_k = 1;
};

struct EvalReport {
    int runs = 0;
    std::vector<double> per_run_accuracy;
    double mean_accuracy = 0.0;
    std::int64_t total_items = 0;
    std::vector<TttEpisode> episodes;  // all runs, run-major order
};

nlohmann::json eval_report_to_json(const EvalReport& report);

/// Few-shot benchmark over the items. Exemplars are drawn per item from
/// the other items with a fresh per-run seed. With ttt enabled each item
/// runs a full episode; otherwise the clean session answers directly.
/// Per-item errors score as incorrect and are logged in the episode.
EvalReport run_benchmark(const std::vector<BenchmarkItem>& items, const RetrievalIndex& index,
                         backends::EmbedBackend& embed, backends::TrainerBackend& trainer,
                         const BenchmarkOptions& opts);

}  // namespace medforge::ttt
