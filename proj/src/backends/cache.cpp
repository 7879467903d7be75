// SPDX-License-Identifier: Apache-2.0

#include "medforge/backends/cache.hpp"

#include "medforge/common/errors.hpp"

namespace medforge::backends {

using nlohmann::json;

ReplayCache::ReplayCache(std::string path, CacheMode mode) : path_(std::move(path)), mode_(mode) {
    if (mode_ == CacheMode::replay) {
        std::ifstream in(path_);
        if (!in) {
            throw ConfigError("replay cache not found: " + path_);
        }
        std::string line;
        size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) {
                continue;
            }
            json rec = json::parse(line, nullptr, false);
            if (rec.is_discarded() || !rec.contains("digest") || !rec.contains("response")) {
                throw ConfigError("malformed replay cache record at " + path_ + ":" +
                                  std::to_string(lineno));
            }
            entries_[rec["digest"].get<std::string>()] = rec["response"];
        }
    } else if (mode_ == CacheMode::record) {
        out_.open(path_, std::ios::trunc);
        if (!out_) {
            throw ConfigError("cannot open cache for recording: " + path_);
        }
    }
}

std::optional<json> ReplayCache::lookup(const std::string& digest) const {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = entries_.find(digest);
    if (it == entries_.end()) {
        return std::nullopt;
    }
    return it->second;
}

void ReplayCache::record(const std::string& digest, json request, json response) {
    std::lock_guard<std::mutex> lock(mutex_);
    if (entries_.emplace(digest, response).second && out_.is_open()) {
        json rec{{"digest", digest}, {"request", std::move(request)}, {"response", std::move(response)}};
        out_ << rec.dump() << "\n";
        out_.flush();
    }
}

std::size_t ReplayCache::size() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return entries_.size();
}

CachedChatBackend::CachedChatBackend(std::unique_ptr<ChatBackend> inner,
                                     std::shared_ptr<ReplayCache> cache)
    : inner_(std::move(inner)), cache_(std::move(cache)) {}

ChatResponse CachedChatBackend::complete(const ChatRequest& req) {
    std::string digest = chat_request_digest(req);
    if (cache_->mode() == CacheMode::replay) {
        auto hit = cache_->lookup(digest);
        if (!hit) {
            throw ReplayMiss("no recorded chat response for digest " + digest);
        }
        ChatResponse resp;
        resp.text = hit->value("text", std::string());
        resp.prompt_tokens = hit->value("prompt_tokens", 0);
        resp.completion_tokens = hit->value("completion_tokens", 0);
        resp.latency_ms = 0;
        return resp;
    }
    ChatResponse resp = inner_->complete(req);
    json request{{"system", req.system_prompt},
                 {"user", req.user_prompt},
                 {"model", req.model_id},
                 {"temperature", req.temperature},
                 {"max_tokens", req.max_tokens}};
    json response{{"text", resp.text},
                  {"prompt_tokens", resp.prompt_tokens},
                  {"completion_tokens", resp.completion_tokens}};
    cache_->record(digest, std::move(request), std::move(response));
    return resp;
}

CachedEmbedBackend::CachedEmbedBackend(std::unique_ptr<EmbedBackend> inner,
                                       std::shared_ptr<ReplayCache> cache, std::string model_id)
    : inner_(std::move(inner)), cache_(std::move(cache)), model_id_(std::move(model_id)) {}

std::vector<EmbeddingVector> CachedEmbedBackend::embed(const std::vector<std::string>& texts) {
    std::string digest = embed_request_digest(model_id_, texts);
    if (cache_->mode() == CacheMode::replay) {
        auto hit = cache_->lookup(digest);
        if (!hit) {
            throw ReplayMiss("no recorded embedding response for digest " + digest);
        }
        std::vector<EmbeddingVector> out;
        for (const auto& row : hit->at("vectors")) {
            EmbeddingVector vec;
            for (const auto& v : row) {
                vec.values.push_back(v.get<double>());
            }
            out.push_back(std::move(vec));
        }
        return out;
    }
    auto out = inner_->embed(texts);
    json vectors = json::array();
    for (const auto& vec : out) {
        vectors.push_back(vec.values);
    }
    cache_->record(digest, json{{"model", model_id_}, {"inputs", texts}},
                   json{{"vectors", std::move(vectors)}});
    return out;
}

CachedRewardBackend::CachedRewardBackend(std::unique_ptr<RewardBackend> inner,
                                         std::shared_ptr<ReplayCache> cache, std::string model_id)
    : inner_(std::move(inner)), cache_(std::move(cache)), model_id_(std::move(model_id)) {}

RewardScore CachedRewardBackend::score(const std::string& prompt, const std::string& response) {
    std::string digest = reward_request_digest(model_id_, prompt, response);
    if (cache_->mode() == CacheMode::replay) {
        auto hit = cache_->lookup(digest);
        if (!hit) {
            throw ReplayMiss("no recorded reward score for digest " + digest);
        }
        return RewardScore{hit->at("score").get<double>()};
    }
    RewardScore s = inner_->score(prompt, response);
    cache_->record(digest, json{{"model", model_id_}, {"prompt", prompt}, {"response", response}},
                   json{{"score", s.scalar}});
    return s;
}

CachedTrainerBackend::CachedTrainerBackend(std::unique_ptr<TrainerBackend> inner,
                                           std::shared_ptr<ReplayCache> cache)
    : inner_(std::move(inner)), cache_(std::move(cache)) {}

TrainerSession CachedTrainerBackend::train(const TrainerJobSpec& spec, TrainerSession session) {
    if (session.state != SessionState::clean) {
        throw IllegalState("trainer: train requires a clean session");
    }
    std::string digest = trainer_train_digest(spec);
    if (cache_->mode() == CacheMode::replay) {
        if (!cache_->lookup(digest)) {
            throw ReplayMiss("no recorded train confirmation for digest " + digest);
        }
        session.state = SessionState::adapted;
        return session;
    }
    TrainerSession out = inner_->train(spec, std::move(session));
    cache_->record(digest, json{{"op", "train"}}, json{{"state", "adapted"}});
    return out;
}

std::string CachedTrainerBackend::generate(const TrainerSession& session, const std::string& prompt) {
    std::string digest = trainer_generate_digest(session, prompt);
    if (cache_->mode() == CacheMode::replay) {
        auto hit = cache_->lookup(digest);
        if (!hit) {
            throw ReplayMiss("no recorded trainer generation for digest " + digest);
        }
        return hit->at("text").get<std::string>();
    }
    std::string text = inner_->generate(session, prompt);
    cache_->record(digest,
                   json{{"op", "generate"},
                        {"state", session_state_name(session.state)},
                        {"prompt", prompt}},
                   json{{"text", text}});
    return text;
}

TrainerSession CachedTrainerBackend::restore(TrainerSession session) {
    if (cache_->mode() == CacheMode::replay) {
        session.state = SessionState::clean;
        return session;
    }
    return inner_->restore(std::move(session));
}

}  // namespace medforge::backends
