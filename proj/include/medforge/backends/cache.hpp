// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <json.hpp>

#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>

#include "medforge/backends/interfaces.hpp"

namespace medforge::backends {

/// Disk-backed request/response store: one JSON record per line with the
/// fields {digest, request, response}. In record mode every response is
/// appended as it arrives; in replay mode the file is loaded up front and
/// lookups never touch the wrapped backend.
class ReplayCache {
public:
    ReplayCache(std::string path, CacheMode mode);

    CacheMode mode() const { return mode_; }

    std::optional<nlohmann::json> lookup(const std::string& digest) const;
    void record(const std::string& digest, nlohmann::json request, nlohmann::json response);

    std::size_t size() const;

private:
    std::string path_;
    CacheMode mode_;
    mutable std::mutex mutex_;
    std::unordered_map<std::string, nlohmann::json> entries_;
    std::ofstream out_;
};

/// Chat decorator: replay serves from the cache (ReplayMiss on unseen
/// digests), record passes through and persists. latency_ms is excluded
/// from cached payloads; replayed responses report zero latency.
class CachedChatBackend : public ChatBackend {
public:
    CachedChatBackend(std::unique_ptr<ChatBackend> inner, std::shared_ptr<ReplayCache> cache);

    ChatResponse complete(const ChatRequest& req) override;

private:
    std::unique_ptr<ChatBackend> inner_;
    std::shared_ptr<ReplayCache> cache_;
};

class CachedEmbedBackend : public EmbedBackend {
public:
    CachedEmbedBackend(std::unique_ptr<EmbedBackend> inner, std::shared_ptr<ReplayCache> cache,
                       std::string model_id);

    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override;

private:
    std::unique_ptr<EmbedBackend> inner_;
    std::shared_ptr<ReplayCache> cache_;
    std::string model_id_;
};

class CachedRewardBackend : public RewardBackend {
public:
    CachedRewardBackend(std::unique_ptr<RewardBackend> inner, std::shared_ptr<ReplayCache> cache,
                        std::string model_id);

    RewardScore score(const std::string& prompt, const std::string& response) override;

private:
    std::unique_ptr<RewardBackend> inner_;
    std::shared_ptr<ReplayCache> cache_;
    std::string model_id_;
};

/// Trainer decorator. Generate responses are keyed on (session state,
/// prompt); train/restore transitions are cached as confirmations so a
/// fully recorded episode replays without a live trainer.
class CachedTrainerBackend : public TrainerBackend {
public:
    CachedTrainerBackend(std::unique_ptr<TrainerBackend> inner, std::shared_ptr<ReplayCache> cache);

    TrainerSession train(const TrainerJobSpec& spec, TrainerSession session) override;
    std::string generate(const TrainerSession& session, const std::string& prompt) override;
    TrainerSession restore(TrainerSession session) override;

private:
    std::unique_ptr<TrainerBackend> inner_;
    std::shared_ptr<ReplayCache> cache_;
};

}  // namespace medforge::backends
