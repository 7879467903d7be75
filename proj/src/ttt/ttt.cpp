// SPDX-License-Identifier: Apache-2.0

#include "medforge/ttt/ttt.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "medforge/common/digest.hpp"
#include "medforge/common/errors.hpp"
#include "medforge/common/rng.hpp"
#include "medforge/common/text.hpp"

namespace medforge::ttt {

using nlohmann::json;

std::string RetrievalIndex::digest() const {
    std::ostringstream canon;
    char buf[64];
    for (std::size_t i = 0; i < ids.size(); ++i) {
        canon << ids[i];
        for (double v : vectors[i].values) {
            std::snprintf(buf, sizeof(buf), "%.17g", v);
            canon << '\t' << buf;
        }
        canon << '\n';
    }
    return sha256_hex(canon.str());
}

RetrievalIndex build_index(const std::vector<responses::SftSample>& samples,
                           backends::EmbedBackend& embed, std::size_t batch_size) {
    if (samples.empty()) {
        throw Error("build_index: samples must be non-empty");
    }
    if (batch_size == 0) {
        batch_size = 64;
    }
    RetrievalIndex index;
    index.ids.reserve(samples.size());
    index.payloads.reserve(samples.size());
    std::vector<std::string> texts;
    texts.reserve(samples.size());
    for (const auto& s : samples) {
        index.ids.push_back(s.id);
        index.payloads.emplace_back(s.instruction, s.response);
        texts.push_back(s.instruction);
    }
    for (std::size_t begin = 0; begin < texts.size(); begin += batch_size) {
        std::size_t end = std::min(begin + batch_size, texts.size());
        std::vector<std::string> batch(texts.begin() + static_cast<std::ptrdiff_t>(begin),
                                       texts.begin() + static_cast<std::ptrdiff_t>(end));
        auto got = embed.embed(batch);
        index.vectors.insert(index.vectors.end(), got.begin(), got.end());
    }
    index.dim = index.vectors.front().dim();
    for (const auto& v : index.vectors) {
        if (v.dim() != index.dim) {
            throw DimensionMismatch("build_index: inconsistent vector dims");
        }
    }
    return index;
}

namespace {

double vector_norm(const backends::EmbeddingVector& v) {
    double sum = 0.0;
    for (double x : v.values) {
        sum += x * x;
    }
    return std::sqrt(sum);
}

double cosine(const backends::EmbeddingVector& a, const backends::EmbeddingVector& b,
              double norm_a, double norm_b) {
    double dot = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        dot += a.values[i] * b.values[i];
    }
    return dot / (norm_a * norm_b);
}

}  // namespace

std::vector<std::pair<std::string, double>> retrieve_top_k(const RetrievalIndex& index,
                                                           const backends::EmbeddingVector& query,
                                                           std::size_t k) {
    if (index.size() == 0) {
        throw Error("retrieve: empty index");
    }
    if (k == 0) {
        throw Error("retrieve: k must be >= 1");
    }
    if (query.dim() != index.dim) {
        throw DimensionMismatch("retrieve: query dim " + std::to_string(query.dim()) +
                                " != index dim " + std::to_string(index.dim));
    }
    double query_norm = vector_norm(query);
    if (query_norm == 0.0) {
        throw DegenerateVector("retrieve: zero-norm query");
    }
    std::vector<std::pair<std::string, double>> scored;
    scored.reserve(index.size());
    for (std::size_t i = 0; i < index.size(); ++i) {
        double row_norm = vector_norm(index.vectors[i]);
        if (row_norm == 0.0) {
            throw DegenerateVector("retrieve: zero-norm row " + index.ids[i]);
        }
        scored.emplace_back(index.ids[i], cosine(query, index.vectors[i], query_norm, row_norm));
    }
    std::size_t keep = k < scored.size() ? k : scored.size();
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep),
                      scored.end(), [](const auto& a, const auto& b) {
                          if (a.second != b.second) {
                              return a.second > b.second;
                          }
                          return a.first < b.first;
                      });
    scored.resize(keep);
    return scored;
}

std::pair<std::string, double> retrieve_top1(const RetrievalIndex& index,
                                             const backends::EmbeddingVector& query) {
    return retrieve_top_k(index, query, 1).front();
}

void to_json(json& j, const TttEpisode& e) {
    j = json{{"question_id", e.question_id}, {"query", e.query},
             {"retrieved_id", e.retrieved_id}, {"similarity", e.similarity},
             {"trained", e.trained},           {"answer", e.answer},
             {"restored", e.restored},         {"error", e.error}};
}

TttEpisode run_episode(const std::string& question_id, const std::string& query_text,
                       const std::string& prompt, const RetrievalIndex& index,
                       backends::EmbedBackend& embed, backends::TrainerBackend& trainer,
                       backends::TrainerSession& session, const EpisodeOptions& opts) {
    TttEpisode episode;
    episode.question_id = question_id;
    episode.query = query_text;
    try {
        auto query_vec = embed.embed({query_text}).at(0);
        auto hits = retrieve_top_k(index, query_vec, opts.top_k == 0 ? 1 : opts.top_k);
        episode.retrieved_id = hits.front().first;
        episode.similarity = hits.front().second;

        backends::TrainerJobSpec job;
        for (const auto& [id, sim] : hits) {
            auto row = std::find(index.ids.begin(), index.ids.end(), id);
            job.samples.push_back(
                index.payloads[static_cast<std::size_t>(row - index.ids.begin())]);
        }
        job.hyperparams = opts.hyperparams;
        session = trainer.train(job, session);
        episode.trained = true;

        episode.answer = trainer.generate(session, prompt);
    } catch (const Error& e) {
        episode.error = error_kind(e);
    }
    // The restore contract: runs on every path; a failure here propagates
    // and aborts the whole run rather than persisting an unrestored episode.
    session = trainer.restore(session);
    episode.restored = true;
    return episode;
}

void BenchmarkItem::validate() const {
    if (question_id.empty() || stem.empty() || options.empty()) {
        throw Error("benchmark item incomplete: " + question_id);
    }
    char expected = 'A';
    bool gold_seen = false;
    for (const auto& [letter, text] : options) {
        if (letter.size() != 1 || letter[0] != expected) {
            throw Error("option letters must be consecutive from 'A' in item " + question_id);
        }
        if (letter == gold) {
            gold_seen = true;
        }
        ++expected;
    }
    if (!gold_seen) {
        throw Error("gold letter not among options in item " + question_id);
    }
}

std::vector<std::string> BenchmarkItem::letters() const {
    std::vector<std::string> out;
    out.reserve(options.size());
    for (const auto& [letter, text] : options) {
        out.push_back(letter);
    }
    return out;
}

void to_json(json& j, const BenchmarkItem& item) {
    json opts = json::array();
    for (const auto& [letter, text] : item.options) {
        opts.push_back(json{{"letter", letter}, {"text", text}});
    }
    j = json{{"question_id", item.question_id},
             {"stem", item.stem},
             {"options", std::move(opts)},
             {"gold", item.gold}};
}

void from_json(const json& j, BenchmarkItem& item) {
    item.question_id = j.at("question_id").get<std::string>();
    item.stem = j.at("stem").get<std::string>();
    item.options.clear();
    for (const auto& opt : j.at("options")) {
        item.options.emplace_back(opt.at("letter").get<std::string>(),
                                  opt.at("text").get<std::string>());
    }
    item.gold = j.at("gold").get<std::string>();
    item.validate();
}

namespace {

void render_item(std::ostringstream& out, const BenchmarkItem& item, bool with_gold) {
    out << "Question: " << item.stem << "\n";
    out << "Options:\n";
    for (const auto& [letter, text] : item.options) {
        out << letter << ". " << text << "\n";
    }
    if (with_gold) {
        out << "Answer: " << item.gold << "\n";
    } else {
        out << "Answer:";
    }
}

}  // namespace

std::string render_fewshot_prompt(const BenchmarkItem& item,
                                  const std::vector<BenchmarkItem>& exemplars) {
    std::ostringstream out;
    for (const auto& ex : exemplars) {
        render_item(out, ex, true);
        out << "\n";
    }
    render_item(out, item, false);
    return out.str();
}

std::optional<std::string> extract_choice(const std::string& output,
                                          const std::vector<std::string>& valid_letters) {
    auto is_valid = [&](char c) {
        char upper = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        return std::any_of(valid_letters.begin(), valid_letters.end(),
                           [&](const std::string& l) { return l.size() == 1 && l[0] == upper; });
    };

    // Rule 1: first "Answer: X" (case-insensitive on the keyword, optional
    // parentheses around the letter) with a valid letter.
    std::string lower = to_lower(output);
    size_t pos = 0;
    while ((pos = lower.find("answer", pos)) != std::string::npos) {
        size_t i = pos + 6;
        while (i < output.size() && (output[i] == ' ' || output[i] == '\t')) ++i;
        if (i < output.size() && output[i] == ':') {
            ++i;
            while (i < output.size() && (output[i] == ' ' || output[i] == '\t')) ++i;
            if (i < output.size() && output[i] == '(') ++i;
            if (i < output.size() && std::isalpha(static_cast<unsigned char>(output[i]))) {
                bool standalone = i + 1 >= output.size() ||
                                  !std::isalnum(static_cast<unsigned char>(output[i + 1]));
                if (standalone && is_valid(output[i])) {
                    return std::string(
                        1, static_cast<char>(std::toupper(static_cast<unsigned char>(output[i]))));
                }
            }
        }
        pos += 6;
    }

    // Rule 2: last standalone uppercase valid letter token. Uppercase only,
    // so articles like "a" never match.
    std::optional<std::string> last;
    for (size_t i = 0; i < output.size(); ++i) {
        char c = output[i];
        if (!std::isupper(static_cast<unsigned char>(c)) || !is_valid(c)) {
            continue;
        }
        bool left_ok = i == 0 || !std::isalnum(static_cast<unsigned char>(output[i - 1]));
        bool right_ok =
            i + 1 >= output.size() || !std::isalnum(static_cast<unsigned char>(output[i + 1]));
        if (left_ok && right_ok) {
            last = std::string(1, c);
        }
    }
    return last;
}

json eval_report_to_json(const EvalReport& report) {
    return json{{"runs", report.runs},
                {"per_run_accuracy", report.per_run_accuracy},
                {"mean_accuracy", report.mean_accuracy},
                {"total_items", report.total_items}};
}

EvalReport run_benchmark(const std::vector<BenchmarkItem>& items, const RetrievalIndex& index,
                         backends::EmbedBackend& embed, backends::TrainerBackend& trainer,
                         const BenchmarkOptions& opts) {
    if (items.empty()) {
        throw EmptyBenchmark("benchmark item list is empty");
    }
    if (opts.runs < 1 || opts.shots < 0) {
        throw ConfigError("benchmark runs must be >= 1 and shots >= 0");
    }
    for (const auto& item : items) {
        item.validate();
    }
    if (static_cast<int>(items.size()) <= opts.shots) {
        throw EmptyBenchmark("need more items than shots to draw exemplars");
    }

    EvalReport report;
    report.runs = opts.runs;
    report.total_items = static_cast<std::int64_t>(items.size());

    backends::TrainerSession session{"bench", backends::SessionState::clean};
    EpisodeOptions episode_opts{opts.hyperparams, opts.top_k};

    for (int run = 0; run < opts.runs; ++run) {
        // One exemplar draw per run, shared across items for output-format
        // consistency: a seeded permutation whose first `shots` entries not
        // equal to the target serve as that item's exemplars.
        DetRng rng(derive_seed(opts.seed, "ttt.run", static_cast<std::uint64_t>(run)));
        std::vector<std::size_t> order(items.size());
        for (std::size_t k = 0; k < order.size(); ++k) {
            order[k] = k;
        }
        rng.shuffle(order);

        std::int64_t correct = 0;
        for (const auto& item : items) {
            std::vector<BenchmarkItem> exemplars;
            for (std::size_t k = 0;
                 k < order.size() && static_cast<int>(exemplars.size()) < opts.shots; ++k) {
                if (items[order[k]].question_id != item.question_id) {
                    exemplars.push_back(items[order[k]]);
                }
            }
            std::string prompt = render_fewshot_prompt(item, exemplars);

            std::string query = item.stem;
            if (opts.query_includes_options) {
                std::ostringstream q;
                q << item.stem;
                for (const auto& [letter, text] : item.options) {
                    q << "\n" << letter << ". " << text;
                }
                query = q.str();
            }

            TttEpisode episode;
            if (opts.ttt) {
                episode = run_episode(item.question_id, query, prompt, index, embed, trainer,
                                      session, episode_opts);
            } else {
                episode.question_id = item.question_id;
                episode.query = query;
                episode.restored = true;  // nothing was adapted
                try {
                    episode.answer = trainer.generate(session, prompt);
                } catch (const Error& e) {
                    episode.error = error_kind(e);
                }
            }

            auto choice = extract_choice(episode.answer, item.letters());
            if (choice && *choice == item.gold) {
                ++correct;
            }
            report.episodes.push_back(std::move(episode));
        }
        report.per_run_accuracy.push_back(static_cast<double>(correct) /
                                          static_cast<double>(items.size()));
    }

    double sum = 0.0;
    for (double a : report.per_run_accuracy) {
        sum += a;
    }
    report.mean_accuracy = sum / static_cast<double>(report.runs);
    return report;
}

}  // namespace medforge::ttt
