// SPDX-License-Identifier: Apache-2.0

#include "medforge/store/stats.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "medforge/common/errors.hpp"
#include "medforge/common/parallel.hpp"
#include "medforge/store/sampling.hpp"

namespace medforge::store {

using nlohmann::json;

std::pair<int, int> axis_range(const std::string& axis) {
    if (axis == "quality" || axis == "difficulty") {
        return {1, 10};
    }
    if (axis == "relevance") {
        return {1, 6};
    }
    return {0, 0};  // unknown: derive from data
}

ScoreStats score_stats(const std::vector<json>& rows, const std::vector<std::string>& axes) {
    if (rows.empty()) {
        throw EmptyDataset("score_stats over an empty dataset");
    }
    ScoreStats stats;
    stats.n = static_cast<std::int64_t>(rows.size());
    for (const auto& axis : axes) {
        std::vector<int> values;
        values.reserve(rows.size());
        for (const auto& row : rows) {
            if (!row.contains(axis) || !row[axis].is_number_integer()) {
                throw MissingAxis("row lacks integer axis '" + axis + "'");
            }
            values.push_back(row[axis].get<int>());
        }
        std::sort(values.begin(), values.end());
        std::int64_t sum = 0;
        for (int v : values) {
            sum += v;
        }
        AxisStats a;
        a.mean = static_cast<double>(sum) / static_cast<double>(values.size());
        std::size_t n = values.size();
        a.median = values[(n - 1) / 2];
        a.p25 = values[(n - 1) / 4];
        a.p75 = values[(3 * (n - 1)) / 4];

        auto [lo, hi] = axis_range(axis);
        if (lo == 0 && hi == 0) {
            lo = values.front();
            hi = values.back();
        }
        for (int b = lo; b <= hi; ++b) {
            a.histogram[b] = 0;
        }
        for (int v : values) {
            ++a.histogram[v];
        }
        stats.axes[axis] = std::move(a);
    }
    return stats;
}

json score_stats_to_json(const ScoreStats& stats) {
    json axes = json::object();
    for (const auto& [name, a] : stats.axes) {
        json hist = json::object();
        for (const auto& [bucket, count] : a.histogram) {
            hist[std::to_string(bucket)] = count;
        }
        axes[name] = json{{"mean", a.mean},
                          {"median", a.median},
                          {"p25", a.p25},
                          {"p75", a.p75},
                          {"histogram", std::move(hist)}};
    }
    return json{{"n", stats.n}, {"axes", std::move(axes)}};
}

ExternalJudgeResult judge_external_dataset(const std::vector<json>& rows,
                                           const std::string& instruction_field, std::size_t n,
                                           backends::ChatBackend& chat,
                                           const synthesis::ChatCallOptions& opts,
                                           std::uint64_t seed, int workers) {
    if (rows.empty()) {
        throw EmptyDataset("judge_external_dataset over an empty dataset");
    }
    auto sampled = reservoir_sample(rows, n, seed);

    struct Slot {
        bool ok = false;
        synthesis::ScoreCard card;
    };
    std::vector<Slot> slots(sampled.size());
    parallel_for_index(sampled.size(), static_cast<std::size_t>(std::max(1, workers)),
                       [&](std::size_t i) {
                           const json& row = sampled[i];
                           if (!row.contains(instruction_field) ||
                               !row[instruction_field].is_string()) {
                               return;  // counted as reject
                           }
                           try {
                               auto resp = chat.complete(synthesis::render_score_prompt(
                                   row[instruction_field].get<std::string>(), opts));
                               slots[i].card = synthesis::parse_score_card(resp.text);
                               slots[i].ok = true;
                           } catch (const Error&) {
                               // reject
                           }
                       });

    ExternalJudgeResult result;
    std::vector<json> card_rows;
    for (const auto& slot : slots) {
        if (!slot.ok) {
            ++result.rejects;
            continue;
        }
        card_rows.push_back(json{{"quality", slot.card.quality},
                                 {"difficulty", slot.card.difficulty},
                                 {"relevance", slot.card.relevance}});
    }
    result.scored = static_cast<std::int64_t>(card_rows.size());
    if (card_rows.empty()) {
        throw EmptyDataset("all sampled rows were rejected by the judge path");
    }
    result.stats = score_stats(card_rows, {"quality", "difficulty", "relevance"});
    return result;
}

void export_embeddings(const std::vector<json>& rows, const std::string& text_field,
                       const std::string& id_field, backends::EmbedBackend& embed,
                       const std::string& out_path, std::size_t batch_size) {
    if (batch_size == 0) {
        batch_size = 64;
    }
    std::vector<std::string> ids;
    std::vector<std::string> texts;
    ids.reserve(rows.size());
    texts.reserve(rows.size());
    for (const auto& row : rows) {
        if (!row.contains(text_field) || !row[text_field].is_string()) {
            throw MissingAxis("row lacks text field '" + text_field + "'");
        }
        if (!row.contains(id_field)) {
            throw MissingAxis("row lacks id field '" + id_field + "'");
        }
        ids.push_back(row[id_field].is_string() ? row[id_field].get<std::string>()
                                                : row[id_field].dump());
        texts.push_back(row[text_field].get<std::string>());
    }

    std::vector<backends::EmbeddingVector> vectors;
    vectors.reserve(texts.size());
    for (std::size_t begin = 0; begin < texts.size(); begin += batch_size) {
        std::size_t end = std::min(begin + batch_size, texts.size());
        std::vector<std::string> batch(texts.begin() + static_cast<std::ptrdiff_t>(begin),
                                       texts.begin() + static_cast<std::ptrdiff_t>(end));
        auto got = embed.embed(batch);
        vectors.insert(vectors.end(), got.begin(), got.end());
    }
    if (!vectors.empty()) {
        for (const auto& v : vectors) {
            if (v.dim() != vectors.front().dim()) {
                throw DimensionMismatch("export_embeddings: inconsistent dims");
            }
        }
    }

    std::filesystem::path p(out_path);
    if (p.has_parent_path()) {
        std::filesystem::create_directories(p.parent_path());
    }
    std::ofstream out(out_path, std::ios::trunc);
    if (!out) {
        throw Error("cannot write embeddings: " + out_path);
    }
    out << (vectors.empty() ? 0 : vectors.front().dim()) << "\n";
    char buf[64];
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        out << ids[i];
        for (double v : vectors[i].values) {
            std::snprintf(buf, sizeof(buf), "%.17g", v);
            out << "\t" << buf;
        }
        out << "\n";
    }
}

}  // namespace medforge::store
