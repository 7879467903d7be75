// SPDX-License-Identifier: Apache-2.0

#include "medforge/cli/config.hpp"

#include <fstream>
#include <set>

#include "medforge/common/digest.hpp"
#include "medforge/common/errors.hpp"

namespace medforge::cli {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed,
                         const std::string& scope) {
    if (!obj.is_object()) {
        throw ConfigError(scope + " must be an object");
    }
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* key : allowed) {
            if (it.key() == key) {
                known = true;
                break;
            }
        }
        if (!known) {
            throw ConfigError("unknown config key: " + scope + "." + it.key());
        }
    }
}

std::uint64_t read_u64(const json& obj, const char* key, std::uint64_t fallback) {
    if (!obj.contains(key)) {
        return fallback;
    }
    if (!obj[key].is_number_unsigned() && !obj[key].is_number_integer()) {
        throw ConfigError(std::string("config key must be an integer: ") + key);
    }
    return obj[key].get<std::uint64_t>();
}

int read_int(const json& obj, const char* key, int fallback) {
    if (!obj.contains(key)) {
        return fallback;
    }
    if (!obj[key].is_number_integer()) {
        throw ConfigError(std::string("config key must be an integer: ") + key);
    }
    return obj[key].get<int>();
}

double read_double(const json& obj, const char* key, double fallback) {
    if (!obj.contains(key)) {
        return fallback;
    }
    if (!obj[key].is_number()) {
        throw ConfigError(std::string("config key must be a number: ") + key);
    }
    return obj[key].get<double>();
}

std::string read_string(const json& obj, const char* key, const std::string& fallback) {
    if (!obj.contains(key)) {
        return fallback;
    }
    if (!obj[key].is_string()) {
        throw ConfigError(std::string("config key must be a string: ") + key);
    }
    return obj[key].get<std::string>();
}

bool read_bool(const json& obj, const char* key, bool fallback) {
    if (!obj.contains(key)) {
        return fallback;
    }
    if (!obj[key].is_boolean()) {
        throw ConfigError(std::string("config key must be a boolean: ") + key);
    }
    return obj[key].get<bool>();
}

enum class BackendKind { chat, embed, reward, trainer };

backends::BackendConfig parse_backend(const json& obj, const std::string& scope,
                                      std::uint64_t global_seed, BackendKind kind) {
    switch (kind) {
        case BackendKind::embed:
            reject_unknown_keys(obj,
                                {"mode", "endpoint_url", "model_id", "api_key_env",
                                 "max_concurrency", "max_retries", "timeout_ms",
                                 "retry_base_delay_ms", "cache_mode", "cache_path", "seed",
                                 "mock_dim"},
                                scope);
            break;
        case BackendKind::trainer:
            reject_unknown_keys(obj,
                                {"mode", "endpoint_url", "model_id", "api_key_env",
                                 "max_concurrency", "max_retries", "timeout_ms",
                                 "retry_base_delay_ms", "cache_mode", "cache_path", "seed",
                                 "mock_mode", "hyperparams"},
                                scope);
            break;
        default:
            reject_unknown_keys(obj,
                                {"mode", "endpoint_url", "model_id", "api_key_env",
                                 "max_concurrency", "max_retries", "timeout_ms",
                                 "retry_base_delay_ms", "cache_mode", "cache_path", "seed"},
                                scope);
            break;
    }
    backends::BackendConfig cfg;
    std::string mode = read_string(obj, "mode", "mock");
    if (mode == "mock") {
        cfg.mode = backends::BackendMode::mock;
    } else if (mode == "http") {
        cfg.mode = backends::BackendMode::http;
    } else {
        throw ConfigError(scope + ".mode must be mock or http");
    }
    cfg.endpoint_url = read_string(obj, "endpoint_url", "");
    cfg.model_id = read_string(obj, "model_id", scope);
    cfg.api_key_env = read_string(obj, "api_key_env", "");
    cfg.max_concurrency = read_int(obj, "max_concurrency", 4);
    cfg.max_retries = read_int(obj, "max_retries", 2);
    cfg.timeout_ms = read_int(obj, "timeout_ms", 30000);
    cfg.retry_base_delay_ms = read_int(obj, "retry_base_delay_ms", 100);
    cfg.cache_mode = backends::cache_mode_from_name(read_string(obj, "cache_mode", "off"));
    cfg.cache_path = read_string(obj, "cache_path", "");
    cfg.mock_seed = read_u64(obj, "seed", derive_seed(global_seed, scope));
    cfg.mock_embed_dim = read_int(obj, "mock_dim", 64);
    cfg.validate(scope);
    return cfg;
}

Paths parse_paths(const json& obj) {
    reject_unknown_keys(obj,
                        {"corpus", "scored", "rejects", "filtered", "attrition", "sft", "dpo",
                         "response_rejects", "labeled", "distribution", "stages_dir",
                         "reasoning_sft", "reasoning_dpo", "stats", "embeddings", "external",
                         "external_report", "benchmark", "episodes", "eval_report"},
                        "paths");
    Paths p;
    p.corpus = read_string(obj, "corpus", "");
    p.scored = read_string(obj, "scored", "");
    p.rejects = read_string(obj, "rejects", "");
    p.filtered = read_string(obj, "filtered", "");
    p.attrition = read_string(obj, "attrition", "");
    p.sft = read_string(obj, "sft", "");
    p.dpo = read_string(obj, "dpo", "");
    p.response_rejects = read_string(obj, "response_rejects", "");
    p.labeled = read_string(obj, "labeled", "");
    p.distribution = read_string(obj, "distribution", "");
    p.stages_dir = read_string(obj, "stages_dir", "");
    p.reasoning_sft = read_string(obj, "reasoning_sft", "");
    p.reasoning_dpo = read_string(obj, "reasoning_dpo", "");
    p.stats = read_string(obj, "stats", "");
    p.embeddings = read_string(obj, "embeddings", "");
    p.external = read_string(obj, "external", "");
    p.external_report = read_string(obj, "external_report", "");
    p.benchmark = read_string(obj, "benchmark", "");
    p.episodes = read_string(obj, "episodes", "");
    p.eval_report = read_string(obj, "eval_report", "");

    std::set<std::string> outputs;
    for (const std::string* out :
         {&p.scored, &p.rejects, &p.filtered, &p.attrition, &p.sft, &p.dpo, &p.response_rejects,
          &p.labeled, &p.distribution, &p.stages_dir, &p.reasoning_sft, &p.reasoning_dpo, &p.stats,
          &p.embeddings, &p.external_report, &p.episodes, &p.eval_report}) {
        if (out->empty()) {
            continue;
        }
        if (!outputs.insert(*out).second) {
            throw ConfigError("output paths must be distinct; duplicated: " + *out);
        }
    }
    return p;
}

}  // namespace

synthesis::ChatCallOptions RunConfig::chat_call_options() const {
    synthesis::ChatCallOptions opts;
    opts.model_id = chat.model_id;
    return opts;
}

RunConfig parse_run_config(const json& doc) {
    reject_unknown_keys(doc,
                        {"seed", "paths", "backends", "synthesis", "filter", "split", "responses",
                         "taxonomy", "stage_plan", "reasoning_split", "analyze", "ttt"},
                        "config");
    if (!doc.contains("seed")) {
        throw ConfigError("config requires an explicit seed (no wall-clock seeding)");
    }

    RunConfig cfg;
    cfg.seed = read_u64(doc, "seed", 0);
    cfg.paths = parse_paths(doc.value("paths", json::object()));

    json backends_obj = doc.value("backends", json::object());
    reject_unknown_keys(backends_obj, {"chat", "embed", "reward", "trainer"}, "backends");
    cfg.chat = parse_backend(backends_obj.value("chat", json::object()), "backends.chat", cfg.seed,
                             BackendKind::chat);
    cfg.embed = parse_backend(backends_obj.value("embed", json::object()), "backends.embed",
                              cfg.seed, BackendKind::embed);
    cfg.reward = parse_backend(backends_obj.value("reward", json::object()), "backends.reward",
                               cfg.seed, BackendKind::reward);

    json trainer_obj = backends_obj.value("trainer", json::object());
    cfg.trainer.backend =
        parse_backend(trainer_obj, "backends.trainer", cfg.seed, BackendKind::trainer);
    std::string mock_mode = read_string(trainer_obj, "mock_mode", "echo");
    if (mock_mode == "echo") {
        cfg.trainer.mock_mode = backends::MockTrainerMode::echo;
    } else if (mock_mode == "oracle") {
        cfg.trainer.mock_mode = backends::MockTrainerMode::oracle;
    } else {
        throw ConfigError("backends.trainer.mock_mode must be echo or oracle");
    }
    if (trainer_obj.contains("hyperparams")) {
        if (!trainer_obj["hyperparams"].is_object()) {
            throw ConfigError("backends.trainer.hyperparams must be an object");
        }
        for (auto it = trainer_obj["hyperparams"].begin(); it != trainer_obj["hyperparams"].end();
             ++it) {
            cfg.trainer.hyperparams[it.key()] =
                it.value().is_string() ? it.value().get<std::string>() : it.value().dump();
        }
    }

    json synthesis_obj = doc.value("synthesis", json::object());
    reject_unknown_keys(synthesis_obj, {"max_parse_retries", "workers"}, "synthesis");
    cfg.synthesis_policy.max_parse_retries = read_int(synthesis_obj, "max_parse_retries", 2);
    cfg.synthesis_policy.workers = read_int(synthesis_obj, "workers", cfg.chat.max_concurrency);

    json filter_obj = doc.value("filter", json::object());
    reject_unknown_keys(filter_obj, {"min_quality", "min_difficulty", "min_relevance", "seed"},
                        "filter");
    cfg.filter.min_quality = read_int(filter_obj, "min_quality", 0);
    cfg.filter.min_difficulty = read_int(filter_obj, "min_difficulty", 0);
    cfg.filter.min_relevance = read_int(filter_obj, "min_relevance", 0);
    cfg.filter.rng_seed = read_u64(filter_obj, "seed", derive_seed(cfg.seed, "filter"));
    cfg.filter.validate();

    json split_obj = doc.value("split", json::object());
    reject_unknown_keys(split_obj, {"complexity_threshold"}, "split");
    cfg.responses_policy.split.complexity_threshold = read_int(split_obj, "complexity_threshold", 8);
    cfg.responses_policy.split.validate();

    json responses_obj = doc.value("responses", json::object());
    reject_unknown_keys(responses_obj, {"max_parse_retries", "workers"}, "responses");
    cfg.responses_policy.max_parse_retries = read_int(responses_obj, "max_parse_retries", 2);
    cfg.responses_policy.workers = read_int(responses_obj, "workers", cfg.chat.max_concurrency);

    json taxonomy_obj = doc.value("taxonomy", json::object());
    reject_unknown_keys(taxonomy_obj, {"max_retries", "workers"}, "taxonomy");
    cfg.taxonomy_max_retries = read_int(taxonomy_obj, "max_retries", 2);
    cfg.taxonomy_workers = read_int(taxonomy_obj, "workers", cfg.chat.max_concurrency);

    json plan_obj = doc.value("stage_plan", json::object());
    reject_unknown_keys(plan_obj, {"overlap", "seed", "stages"}, "stage_plan");
    std::string overlap = read_string(plan_obj, "overlap", "independent");
    if (overlap == "independent") {
        cfg.stage_plan.overlap = store::Overlap::independent;
    } else if (overlap == "disjoint") {
        cfg.stage_plan.overlap = store::Overlap::disjoint;
    } else {
        throw ConfigError("stage_plan.overlap must be independent or disjoint");
    }
    cfg.stage_plan.seed = read_u64(plan_obj, "seed", derive_seed(cfg.seed, "stages"));
    if (plan_obj.contains("stages")) {
        if (!plan_obj["stages"].is_array()) {
            throw ConfigError("stage_plan.stages must be an array");
        }
        for (const auto& stage_obj : plan_obj["stages"]) {
            reject_unknown_keys(stage_obj, {"selector", "n"}, "stage_plan.stages[]");
            store::Stage stage;
            stage.selector = store::parse_selector(read_string(stage_obj, "selector", "whole"));
            stage.n = read_int(stage_obj, "n", 0);
            cfg.stage_plan.stages.push_back(std::move(stage));
        }
        cfg.stage_plan.validate();
    }

    json rsplit_obj = doc.value("reasoning_split", json::object());
    reject_unknown_keys(rsplit_obj, {"fraction", "seed"}, "reasoning_split");
    cfg.reasoning_fraction = read_double(rsplit_obj, "fraction", 0.5);
    cfg.reasoning_seed = read_u64(rsplit_obj, "seed", derive_seed(cfg.seed, "reasoning_split"));

    json analyze_obj = doc.value("analyze", json::object());
    reject_unknown_keys(analyze_obj,
                        {"axes", "external_instruction_field", "judge_sample_n", "embed_text_field",
                         "embed_id_field"},
                        "analyze");
    if (analyze_obj.contains("axes")) {
        cfg.analyze.axes.clear();
        for (const auto& a : analyze_obj["axes"]) {
            cfg.analyze.axes.push_back(a.get<std::string>());
        }
    }
    cfg.analyze.external_instruction_field =
        read_string(analyze_obj, "external_instruction_field", "instruction");
    cfg.analyze.judge_sample_n = read_int(analyze_obj, "judge_sample_n", 50);
    if (cfg.analyze.judge_sample_n < 1) {
        throw ConfigError("analyze.judge_sample_n must be >= 1");
    }
    cfg.analyze.embed_text_field = read_string(analyze_obj, "embed_text_field", "instruction");
    cfg.analyze.embed_id_field = read_string(analyze_obj, "embed_id_field", "id");

    json ttt_obj = doc.value("ttt", json::object());
    reject_unknown_keys(
        ttt_obj, {"enabled", "runs", "shots", "seed", "query_includes_options", "top_k"}, "ttt");
    cfg.ttt.enabled = read_bool(ttt_obj, "enabled", true);
    cfg.ttt.runs = read_int(ttt_obj, "runs", 3);
    cfg.ttt.shots = read_int(ttt_obj, "shots", 3);
    cfg.ttt.seed = read_u64(ttt_obj, "seed", derive_seed(cfg.seed, "ttt"));
    cfg.ttt.query_includes_options = read_bool(ttt_obj, "query_includes_options", true);
    cfg.ttt.top_k = read_int(ttt_obj, "top_k", 1);
    if (cfg.ttt.runs < 1 || cfg.ttt.shots < 0 || cfg.ttt.top_k < 1) {
        throw ConfigError("ttt.runs must be >= 1, ttt.shots >= 0 and ttt.top_k >= 1");
    }

    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config: " + path);
    }
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) {
        throw ConfigError("config is not valid JSON: " + path);
    }
    return parse_run_config(doc);
}

void apply_override(json& doc, const std::string& assignment) {
    size_t eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ConfigError("override must look like key.path=value: " + assignment);
    }
    std::string path = assignment.substr(0, eq);
    std::string value = assignment.substr(eq + 1);

    json parsed = json::parse(value, nullptr, false);
    json final_value = parsed.is_discarded() ? json(value) : parsed;

    json* node = &doc;
    size_t start = 0;
    for (;;) {
        size_t dot = path.find('.', start);
        std::string key = path.substr(start, dot == std::string::npos ? std::string::npos
                                                                      : dot - start);
        if (key.empty()) {
            throw ConfigError("override path has an empty segment: " + path);
        }
        if (dot == std::string::npos) {
            (*node)[key] = final_value;
            return;
        }
        node = &(*node)[key];
        start = dot + 1;
    }
}

}  // namespace medforge::cli
