// SPDX-License-Identifier: Apache-2.0

#include "medforge/backends/http.hpp"

#include <httplib.h>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <thread>

#include "medforge/common/errors.hpp"

namespace medforge::backends {

using nlohmann::json;

std::pair<std::string, std::string> split_url(const std::string& url) {
    size_t scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw ConfigError("endpoint_url must include a scheme: " + url);
    }
    size_t path_begin = url.find('/', scheme_end + 3);
    if (path_begin == std::string::npos) {
        return {url, "/"};
    }
    return {url.substr(0, path_begin), url.substr(path_begin)};
}

namespace {

httplib::Headers make_headers(const BackendConfig& cfg) {
    httplib::Headers headers;
    if (!cfg.api_key_env.empty()) {
        if (const char* key = std::getenv(cfg.api_key_env.c_str())) {
            headers.emplace("Authorization", std::string("Bearer ") + key);
        }
    }
    return headers;
}

bool retryable_status(int status) {
    return status == 429 || status >= 500;
}

/// POST with exponential backoff. Retries connect failures and
/// retryable statuses up to cfg.max_retries; a non-retryable 4xx raises
/// BackendRefusal. Returns the response body of a 2xx reply.
std::string post_with_retries(const BackendConfig& cfg, const std::string& path,
                              const std::string& body) {
    auto [base, base_path] = split_url(cfg.endpoint_url);
    std::string full_path = path.empty() ? base_path : (base_path == "/" ? path : base_path + path);

    httplib::Client client(base);
    client.set_connection_timeout(0, cfg.timeout_ms * 1000LL);
    client.set_read_timeout(cfg.timeout_ms / 1000, (cfg.timeout_ms % 1000) * 1000);
    httplib::Headers headers = make_headers(cfg);

    int attempts = cfg.max_retries + 1;
    std::string last_error;
    for (int attempt = 0; attempt < attempts; ++attempt) {
        if (attempt > 0) {
            int delay = cfg.retry_base_delay_ms << (attempt - 1);
            std::this_thread::sleep_for(std::chrono::milliseconds(delay));
        }
        auto res = client.Post(full_path, headers, body, "application/json");
        if (!res) {
            last_error = "connection failure (" + httplib::to_string(res.error()) + ")";
            continue;
        }
        if (res->status >= 200 && res->status < 300) {
            return res->body;
        }
        if (retryable_status(res->status)) {
            last_error = "status " + std::to_string(res->status);
            continue;
        }
        throw BackendRefusal("backend refused request: status " + std::to_string(res->status) +
                             " body: " + res->body.substr(0, 200));
    }
    throw TransportError("request failed after " + std::to_string(attempts) +
                         " attempts: " + last_error);
}

}  // namespace

HttpChatBackend::HttpChatBackend(BackendConfig cfg) : cfg_(std::move(cfg)) {}

ChatResponse HttpChatBackend::complete(const ChatRequest& req) {
    if (req.user_prompt.empty()) {
        throw Error("chat request: user_prompt must be non-empty");
    }
    if (req.max_tokens < 1) {
        throw Error("chat request: max_tokens must be >= 1");
    }
    if (req.temperature < 0.0 || req.temperature > 2.0) {
        throw Error("chat request: temperature must lie in [0, 2]");
    }
    json messages = json::array();
    if (!req.system_prompt.empty()) {
        messages.push_back({{"role", "system"}, {"content", req.system_prompt}});
    }
    messages.push_back({{"role", "user"}, {"content", req.user_prompt}});
    json body{{"model", req.model_id.empty() ? cfg_.model_id : req.model_id},
              {"messages", messages},
              {"temperature", req.temperature},
              {"max_tokens", req.max_tokens}};

    auto start = std::chrono::steady_clock::now();
    std::string reply = post_with_retries(cfg_, "", body.dump());
    auto elapsed = std::chrono::steady_clock::now() - start;

    json parsed;
    try {
        parsed = json::parse(reply);
    } catch (const json::exception& e) {
        throw TransportError(std::string("malformed chat response: ") + e.what());
    }
    if (!parsed.contains("choices") || !parsed["choices"].is_array() || parsed["choices"].empty() ||
        !parsed["choices"][0].contains("message")) {
        throw TransportError("chat response missing choices[0].message");
    }
    ChatResponse resp;
    resp.text = parsed["choices"][0]["message"].value("content", std::string());
    if (resp.text.empty()) {
        throw TransportError("chat response contained empty content");
    }
    if (parsed.contains("usage")) {
        resp.prompt_tokens = parsed["usage"].value("prompt_tokens", 0);
        resp.completion_tokens = parsed["usage"].value("completion_tokens", 0);
    }
    resp.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count();
    return resp;
}

HttpEmbedBackend::HttpEmbedBackend(BackendConfig cfg) : cfg_(std::move(cfg)) {}

std::vector<EmbeddingVector> HttpEmbedBackend::embed(const std::vector<std::string>& texts) {
    if (texts.empty()) {
        throw Error("embed: texts must be non-empty");
    }
    for (const auto& t : texts) {
        if (t.empty()) {
            throw Error("embed: each text must be non-empty");
        }
    }
    json body{{"model", cfg_.model_id}, {"input", texts}};
    std::string reply = post_with_retries(cfg_, "", body.dump());

    json parsed;
    try {
        parsed = json::parse(reply);
    } catch (const json::exception& e) {
        throw TransportError(std::string("malformed embedding response: ") + e.what());
    }
    if (!parsed.contains("data") || !parsed["data"].is_array() ||
        parsed["data"].size() != texts.size()) {
        throw TransportError("embedding response data length mismatch");
    }
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    size_t dim = 0;
    for (const auto& item : parsed["data"]) {
        EmbeddingVector vec;
        for (const auto& v : item.at("embedding")) {
            vec.values.push_back(v.get<double>());
        }
        if (dim == 0) {
            dim = vec.dim();
        } else if (vec.dim() != dim) {
            throw DimensionMismatch("embedding backend returned inconsistent dims: " +
                                    std::to_string(dim) + " vs " + std::to_string(vec.dim()));
        }
        out.push_back(std::move(vec));
    }
    return out;
}

HttpRewardBackend::HttpRewardBackend(BackendConfig cfg) : cfg_(std::move(cfg)) {}

RewardScore HttpRewardBackend::score(const std::string& prompt, const std::string& response) {
    if (prompt.empty() || response.empty()) {
        throw Error("reward: prompt and response must be non-empty");
    }
    json body{{"model", cfg_.model_id}, {"prompt", prompt}, {"response", response}};
    std::string reply = post_with_retries(cfg_, "", body.dump());
    json parsed;
    try {
        parsed = json::parse(reply);
    } catch (const json::exception& e) {
        throw TransportError(std::string("malformed reward response: ") + e.what());
    }
    if (!parsed.contains("score") || !parsed["score"].is_number()) {
        throw TransportError("reward response missing numeric score");
    }
    double s = parsed["score"].get<double>();
    if (!std::isfinite(s)) {
        throw TransportError("reward response score is not finite");
    }
    return RewardScore{s};
}

HttpTrainerBackend::HttpTrainerBackend(BackendConfig cfg) : cfg_(std::move(cfg)) {}

std::string HttpTrainerBackend::post_json(const std::string& path, const std::string& body) {
    try {
        return post_with_retries(cfg_, path, body);
    } catch (const BackendRefusal& e) {
        throw TrainerUnavailable(e.what());
    } catch (const TransportError& e) {
        throw TrainerUnavailable(e.what());
    }
}

TrainerSession HttpTrainerBackend::train(const TrainerJobSpec& spec, TrainerSession session) {
    if (spec.samples.empty()) {
        throw Error("trainer: job spec must contain samples");
    }
    if (session.state != SessionState::clean) {
        throw IllegalState("trainer: train requires a clean session");
    }
    json samples = json::array();
    for (const auto& [prompt, response] : spec.samples) {
        samples.push_back({{"prompt", prompt}, {"response", response}});
    }
    json body{{"session_id", session.session_id},
              {"samples", samples},
              {"hyperparams", spec.hyperparams}};
    std::string reply = post_json("/train", body.dump());
    json parsed = json::parse(reply, nullptr, false);
    if (parsed.is_discarded() || parsed.value("state", "") != "adapted") {
        throw TrainerUnavailable("trainer /train did not confirm adapted state");
    }
    session.state = SessionState::adapted;
    return session;
}

std::string HttpTrainerBackend::generate(const TrainerSession& session, const std::string& prompt) {
    json body{{"session_id", session.session_id}, {"prompt", prompt}};
    std::string reply = post_json("/generate", body.dump());
    json parsed = json::parse(reply, nullptr, false);
    if (parsed.is_discarded() || !parsed.contains("text")) {
        throw TrainerUnavailable("trainer /generate returned no text");
    }
    return parsed["text"].get<std::string>();
}

TrainerSession HttpTrainerBackend::restore(TrainerSession session) {
    json body{{"session_id", session.session_id}};
    std::string reply = post_json("/restore", body.dump());
    json parsed = json::parse(reply, nullptr, false);
    if (parsed.is_discarded() || parsed.value("state", "") != "clean") {
        throw TrainerUnavailable("trainer /restore did not confirm clean state");
    }
    session.state = SessionState::clean;
    return session;
}

}  // namespace medforge::backends
