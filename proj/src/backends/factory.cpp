// SPDX-License-Identifier: Apache-2.0

#include "medforge/backends/factory.hpp"

#include "medforge/backends/http.hpp"
#include "medforge/backends/limiter.hpp"

namespace medforge::backends {

namespace {

std::shared_ptr<ReplayCache> make_cache(const BackendConfig& cfg) {
    if (cfg.cache_mode == CacheMode::off) {
        return nullptr;
    }
    return std::make_shared<ReplayCache>(cfg.cache_path, cfg.cache_mode);
}

}  // namespace

std::unique_ptr<ChatBackend> make_chat_backend(const BackendConfig& cfg) {
    std::unique_ptr<ChatBackend> stack;
    if (cfg.mode == BackendMode::mock) {
        stack = std::make_unique<MockChatBackend>(cfg.mock_seed);
    } else {
        stack = std::make_unique<HttpChatBackend>(cfg);
    }
    if (auto cache = make_cache(cfg)) {
        stack = std::make_unique<CachedChatBackend>(std::move(stack), std::move(cache));
    }
    return std::make_unique<LimitedChatBackend>(std::move(stack), cfg.max_concurrency);
}

std::unique_ptr<EmbedBackend> make_embed_backend(const BackendConfig& cfg) {
    std::unique_ptr<EmbedBackend> stack;
    if (cfg.mode == BackendMode::mock) {
        stack = std::make_unique<MockEmbedBackend>(cfg.mock_seed, cfg.mock_embed_dim, cfg.model_id);
    } else {
        stack = std::make_unique<HttpEmbedBackend>(cfg);
    }
    if (auto cache = make_cache(cfg)) {
        stack = std::make_unique<CachedEmbedBackend>(std::move(stack), std::move(cache), cfg.model_id);
    }
    return std::make_unique<LimitedEmbedBackend>(std::move(stack), cfg.max_concurrency);
}

std::unique_ptr<RewardBackend> make_reward_backend(const BackendConfig& cfg) {
    std::unique_ptr<RewardBackend> stack;
    if (cfg.mode == BackendMode::mock) {
        stack = std::make_unique<MockRewardBackend>(cfg.mock_seed);
    } else {
        stack = std::make_unique<HttpRewardBackend>(cfg);
    }
    if (auto cache = make_cache(cfg)) {
        stack = std::make_unique<CachedRewardBackend>(std::move(stack), std::move(cache), cfg.model_id);
    }
    return std::make_unique<LimitedRewardBackend>(std::move(stack), cfg.max_concurrency);
}

TrainerHandle make_trainer_backend(const BackendConfig& cfg, MockTrainerMode mock_mode,
                                   std::map<std::string, std::string> answer_key) {
    TrainerHandle handle;
    if (cfg.mode == BackendMode::mock) {
        auto mock = std::make_unique<MockTrainerBackend>(cfg.mock_seed, mock_mode);
        if (!answer_key.empty()) {
            mock->set_answer_key(std::move(answer_key));
        }
        handle.mock = mock.get();
        handle.backend = std::move(mock);
    } else {
        handle.backend = std::make_unique<HttpTrainerBackend>(cfg);
    }
    if (auto cache = make_cache(cfg)) {
        handle.backend = std::make_unique<CachedTrainerBackend>(std::move(handle.backend), std::move(cache));
    }
    return handle;
}

}  // namespace medforge::backends
