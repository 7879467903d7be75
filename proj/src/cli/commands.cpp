// SPDX-License-Identifier: Apache-2.0

#include "medforge/cli/commands.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include "medforge/backends/factory.hpp"
#include "medforge/common/digest.hpp"
#include "medforge/common/errors.hpp"
#include "medforge/common/log.hpp"
#include "medforge/common/text.hpp"
#include "medforge/store/jsonl.hpp"
#include "medforge/store/stats.hpp"
#include "medforge/taxonomy/taxonomy.hpp"
#include "medforge/ttt/ttt.hpp"

namespace medforge::cli {

using nlohmann::json;

namespace {

void require_path(const std::string& value, const char* key) {
    if (value.empty()) {
        throw ConfigError(std::string("paths.") + key + " is required for this command");
    }
}

void write_report(const std::string& path, const json& doc) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) {
        std::filesystem::create_directories(p.parent_path());
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw Error("cannot write report: " + path);
    }
    out << doc.dump(2) << "\n";
}

std::vector<responses::SftSample> load_reasoning_subset(const std::string& labeled_path) {
    auto samples = store::read_jsonl_as<responses::SftSample>(labeled_path);
    std::vector<responses::SftSample> reasoning;
    for (auto& s : samples) {
        if (s.style == responses::SampleStyle::reasoning) {
            reasoning.push_back(std::move(s));
        }
    }
    return reasoning;
}

}  // namespace

void cmd_generate_instructions(const RunConfig& cfg) {
    require_path(cfg.paths.corpus, "corpus");
    require_path(cfg.paths.scored, "scored");
    require_path(cfg.paths.rejects, "rejects");

    auto corpus = store::open_dataset(cfg.paths.corpus);
    std::vector<synthesis::RawText> texts;
    texts.reserve(corpus.size());
    for (const auto& row : corpus) {
        texts.push_back(row.get<synthesis::RawText>());
    }

    auto chat = backends::make_chat_backend(cfg.chat);
    auto result = synthesis::synthesize_instructions(texts, *chat, cfg.chat_call_options(),
                                                     cfg.synthesis_policy);

    std::string corpus_digest = sha256_file_hex(cfg.paths.corpus);
    store::write_dataset(cfg.paths.scored, store::to_rows(result.instructions), "scored",
                         {corpus_digest}, cfg.seed);
    store::write_jsonl(cfg.paths.rejects, store::to_rows(result.rejects));
    log_info("generate_instructions.done", {{"texts", texts.size()},
                                            {"instructions", result.instructions.size()},
                                            {"rejects", result.rejects.size()}});
}

void cmd_filter(const RunConfig& cfg) {
    require_path(cfg.paths.scored, "scored");
    require_path(cfg.paths.filtered, "filtered");
    require_path(cfg.paths.attrition, "attrition");

    auto scored = store::open_dataset(cfg.paths.scored);
    std::vector<synthesis::ScoredInstruction> records;
    records.reserve(scored.size());
    for (const auto& row : scored) {
        records.push_back(row.get<synthesis::ScoredInstruction>());
    }

    auto result = filtering::filter_corpus(records, cfg.filter);

    std::string scored_digest = sha256_file_hex(cfg.paths.scored);
    store::write_dataset(cfg.paths.filtered, store::to_rows(result.winners), "scored",
                         {scored_digest}, cfg.filter.rng_seed);
    write_report(cfg.paths.attrition, json(result.report));
    log_info("filter.done",
             {{"groups", result.report.total_groups}, {"winners", result.report.winners}});
}

void cmd_generate_responses(const RunConfig& cfg) {
    require_path(cfg.paths.corpus, "corpus");
    require_path(cfg.paths.filtered, "filtered");
    require_path(cfg.paths.sft, "sft");
    require_path(cfg.paths.dpo, "dpo");
    require_path(cfg.paths.response_rejects, "response_rejects");

    auto filtered_rows = store::open_dataset(cfg.paths.filtered);
    std::vector<synthesis::ScoredInstruction> filtered;
    filtered.reserve(filtered_rows.size());
    for (const auto& row : filtered_rows) {
        filtered.push_back(row.get<synthesis::ScoredInstruction>());
    }

    std::map<std::string, std::string> source_texts;
    for (const auto& row : store::open_dataset(cfg.paths.corpus)) {
        auto text = row.get<synthesis::RawText>();
        source_texts[text.id] = text.text;
    }

    auto chat = backends::make_chat_backend(cfg.chat);
    auto reward = backends::make_reward_backend(cfg.reward);
    auto result = responses::generate_responses(filtered, source_texts, *chat, *reward,
                                                cfg.chat_call_options(), cfg.responses_policy);

    std::string filtered_digest = sha256_file_hex(cfg.paths.filtered);
    std::string corpus_digest = sha256_file_hex(cfg.paths.corpus);
    store::write_dataset(cfg.paths.sft, store::to_rows(result.sft), "sft",
                         {filtered_digest, corpus_digest}, cfg.seed);
    store::write_dataset(cfg.paths.dpo, store::to_rows(result.dpo), "dpo",
                         {filtered_digest, corpus_digest}, cfg.seed);
    store::write_jsonl(cfg.paths.response_rejects, store::to_rows(result.rejects));
    log_info("generate_responses.done", {{"sft", result.sft.size()},
                                         {"dpo", result.dpo.size()},
                                         {"rejects", result.rejects.size()}});
}

void cmd_classify(const RunConfig& cfg) {
    require_path(cfg.paths.sft, "sft");
    require_path(cfg.paths.labeled, "labeled");
    require_path(cfg.paths.distribution, "distribution");

    auto samples = store::read_jsonl_as<responses::SftSample>(cfg.paths.sft);
    auto chat = backends::make_chat_backend(cfg.chat);
    taxonomy::ClassifyPolicy policy{cfg.taxonomy_max_retries, cfg.taxonomy_workers};
    auto result = taxonomy::classify_corpus(samples, *chat, cfg.chat_call_options(), policy);

    std::string sft_digest = sha256_file_hex(cfg.paths.sft);
    store::write_dataset(cfg.paths.labeled, store::to_rows(result.labeled), "sft", {sft_digest},
                         cfg.seed);
    write_report(cfg.paths.distribution, taxonomy::distribution_to_json(result.report));
    log_info("classify.done",
             {{"samples", result.labeled.size()}, {"flagged", result.report.flagged}});
}

void cmd_analyze(const RunConfig& cfg) {
    std::string dataset_path = cfg.paths.labeled.empty() ? cfg.paths.sft : cfg.paths.labeled;
    if (dataset_path.empty()) {
        throw ConfigError("paths.labeled (or paths.sft) is required for analyze");
    }
    require_path(cfg.paths.stats, "stats");

    auto rows = store::open_dataset(dataset_path);
    auto stats = store::score_stats(rows, cfg.analyze.axes);
    json report{{"dataset", std::filesystem::path(dataset_path).filename().string()},
                {"stats", store::score_stats_to_json(stats)}};
    write_report(cfg.paths.stats, report);

    if (!cfg.paths.external.empty()) {
        require_path(cfg.paths.external_report, "external_report");
        auto external_rows = store::open_dataset(cfg.paths.external);
        auto chat = backends::make_chat_backend(cfg.chat);
        auto judged = store::judge_external_dataset(
            external_rows, cfg.analyze.external_instruction_field,
            static_cast<std::size_t>(cfg.analyze.judge_sample_n), *chat, cfg.chat_call_options(),
            derive_seed(cfg.seed, "judge"), cfg.chat.max_concurrency);
        json ext{{"dataset", std::filesystem::path(cfg.paths.external).filename().string()},
                 {"scored", judged.scored},
                 {"rejects", judged.rejects},
                 {"stats", store::score_stats_to_json(judged.stats)}};
        write_report(cfg.paths.external_report, ext);
    }

    if (!cfg.paths.embeddings.empty()) {
        auto embed = backends::make_embed_backend(cfg.embed);
        store::export_embeddings(rows, cfg.analyze.embed_text_field, cfg.analyze.embed_id_field,
                                 *embed, cfg.paths.embeddings);
    }
    log_info("analyze.done", {{"rows", rows.size()}});
}

void cmd_build_stages(const RunConfig& cfg) {
    require_path(cfg.paths.labeled, "labeled");
    require_path(cfg.paths.stages_dir, "stages_dir");
    if (cfg.stage_plan.stages.empty()) {
        throw ConfigError("stage_plan.stages must be set for build-stages");
    }

    auto samples = store::read_jsonl_as<responses::SftSample>(cfg.paths.labeled);
    auto splits = store::build_stage_splits(samples, cfg.stage_plan);
    std::string labeled_digest = sha256_file_hex(cfg.paths.labeled);

    std::filesystem::create_directories(cfg.paths.stages_dir);
    for (std::size_t i = 0; i < splits.size(); ++i) {
        std::string path =
            (std::filesystem::path(cfg.paths.stages_dir) / ("stage" + std::to_string(i + 1) + ".jsonl"))
                .string();
        store::write_dataset(path, store::to_rows(splits[i]), "sft", {labeled_digest},
                             cfg.stage_plan.seed);
        log_info("build_stages.stage", {{"stage", i + 1},
                                        {"selector", cfg.stage_plan.stages[i].selector.to_string()},
                                        {"count", splits[i].size()}});
    }

    if (!cfg.paths.reasoning_sft.empty() || !cfg.paths.reasoning_dpo.empty()) {
        require_path(cfg.paths.reasoning_sft, "reasoning_sft");
        require_path(cfg.paths.reasoning_dpo, "reasoning_dpo");
        require_path(cfg.paths.dpo, "dpo");
        auto reasoning = load_reasoning_subset(cfg.paths.labeled);
        auto [sft_half, dpo_half] =
            store::split_reasoning_for_sft_and_dpo(reasoning, cfg.reasoning_fraction,
                                                   cfg.reasoning_seed);
        store::write_dataset(cfg.paths.reasoning_sft, store::to_rows(sft_half), "sft",
                             {labeled_digest}, cfg.reasoning_seed);

        std::set<std::string> dpo_ids;
        for (const auto& s : dpo_half) {
            dpo_ids.insert(s.id);
        }
        std::vector<responses::DpoSample> dpo_subset;
        for (const auto& row : store::open_dataset(cfg.paths.dpo)) {
            auto pair = row.get<responses::DpoSample>();
            if (dpo_ids.count(pair.id) != 0) {
                dpo_subset.push_back(std::move(pair));
            }
        }
        std::string dpo_digest = sha256_file_hex(cfg.paths.dpo);
        store::write_dataset(cfg.paths.reasoning_dpo, store::to_rows(dpo_subset), "dpo",
                             {labeled_digest, dpo_digest}, cfg.reasoning_seed);
        log_info("build_stages.reasoning_split",
                 {{"sft_half", sft_half.size()}, {"dpo_half", dpo_subset.size()}});
    }
}

void cmd_ttt_eval(const RunConfig& cfg) {
    require_path(cfg.paths.benchmark, "benchmark");
    require_path(cfg.paths.labeled, "labeled");
    require_path(cfg.paths.episodes, "episodes");
    require_path(cfg.paths.eval_report, "eval_report");

    std::vector<ttt::BenchmarkItem> items;
    for (const auto& row : store::open_dataset(cfg.paths.benchmark)) {
        items.push_back(row.get<ttt::BenchmarkItem>());
    }

    auto reasoning = load_reasoning_subset(cfg.paths.labeled);
    if (reasoning.empty()) {
        throw Error("ttt-eval: labeled dataset has no reasoning samples to index");
    }
    auto embed = backends::make_embed_backend(cfg.embed);
    auto index = ttt::build_index(reasoning, *embed);

    std::map<std::string, std::string> answer_key;
    if (cfg.trainer.mock_mode == backends::MockTrainerMode::oracle) {
        for (const auto& item : items) {
            answer_key[item.stem] = item.gold;
        }
    }
    auto trainer =
        backends::make_trainer_backend(cfg.trainer.backend, cfg.trainer.mock_mode, answer_key);

    ttt::BenchmarkOptions opts;
    opts.runs = cfg.ttt.runs;
    opts.shots = cfg.ttt.shots;
    opts.ttt = cfg.ttt.enabled;
    opts.seed = cfg.ttt.seed;
    opts.query_includes_options = cfg.ttt.query_includes_options;
    opts.hyperparams = cfg.trainer.hyperparams;
    opts.top_k = static_cast<std::size_t>(cfg.ttt.top_k);

    auto report = ttt::run_benchmark(items, index, *embed, *trainer.backend, opts);

    store::write_jsonl(cfg.paths.episodes, store::to_rows(report.episodes));
    write_report(cfg.paths.eval_report, ttt::eval_report_to_json(report));
    log_info("ttt_eval.done", {{"items", items.size()},
                               {"runs", report.runs},
                               {"mean_accuracy", report.mean_accuracy},
                               {"ttt", cfg.ttt.enabled}});
}

void cmd_pipeline(const RunConfig& cfg) {
    cmd_generate_instructions(cfg);
    cmd_filter(cfg);
    cmd_generate_responses(cfg);
    cmd_classify(cfg);
    cmd_build_stages(cfg);
    log_info("pipeline.done", {});
}

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"medforge: synthetic medical instruction dataset pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    std::string seed_override;
    std::string chat_cache_mode;
    std::string ttt_flag;

    app.add_option("--config", config_path, "Run configuration (JSON)")->required();
    app.add_option("--seed", seed_override, "Override the global seed");
    app.add_option("--backend.chat.cache_mode", chat_cache_mode,
                   "Override chat cache mode: off|record|replay");
    app.add_option("--ttt", ttt_flag, "Enable the test-time-training path: on|off")
        ->check(CLI::IsMember({"on", "off"}));
    app.add_option("--set", overrides, "Override any config key: a.b.c=value");

    static const std::pair<const char*, const char*> kCommands[] = {
        {"generate-instructions", "Generate and judge two instructions per corpus text"},
        {"filter", "Keep at most one instruction per text via pairwise selection"},
        {"generate-responses", "Produce styled/reasoning responses and DPO pairs"},
        {"classify", "Route samples into primary and secondary departments"},
        {"analyze", "Score statistics, external-dataset judging, embedding export"},
        {"build-stages", "Staged sampling plus the reasoning SFT/DPO split"},
        {"ttt-eval", "Few-shot benchmark with retrieve-train-infer-restore episodes"},
        {"pipeline", "Run every dataset stage in order"},
    };
    for (const auto& [name, description] : kCommands) {
        app.add_subcommand(name, description)->fallthrough();
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        std::ifstream in(config_path);
        if (!in) {
            throw ConfigError("cannot open config: " + config_path);
        }
        json doc = json::parse(in, nullptr, false);
        if (doc.is_discarded()) {
            throw ConfigError("config is not valid JSON: " + config_path);
        }
        if (!seed_override.empty()) {
            apply_override(doc, "seed=" + seed_override);
        }
        if (!chat_cache_mode.empty()) {
            apply_override(doc, "backends.chat.cache_mode=" + chat_cache_mode);
        }
        if (!ttt_flag.empty()) {
            apply_override(doc, std::string("ttt.enabled=") + (ttt_flag == "on" ? "true" : "false"));
        }
        for (const auto& assignment : overrides) {
            apply_override(doc, assignment);
        }
        RunConfig cfg = parse_run_config(doc);

        std::string command = app.get_subcommands().front()->get_name();
        if (command == "generate-instructions") {
            cmd_generate_instructions(cfg);
        } else if (command == "filter") {
            cmd_filter(cfg);
        } else if (command == "generate-responses") {
            cmd_generate_responses(cfg);
        } else if (command == "classify") {
            cmd_classify(cfg);
        } else if (command == "analyze") {
            cmd_analyze(cfg);
        } else if (command == "build-stages") {
            cmd_build_stages(cfg);
        } else if (command == "ttt-eval") {
            cmd_ttt_eval(cfg);
        } else if (command == "pipeline") {
            cmd_pipeline(cfg);
        }
        return 0;
    } catch (const ConfigError& e) {
        log_error("config_error", {{"message", e.what()}});
        return 2;
    } catch (const std::exception& e) {
        log_error("fatal", {{"message", e.what()}, {"kind", error_kind(e)}});
        return 1;
    }
}

}  // namespace medforge::cli
