// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <memory>
#include <string>

#include "medforge/backends/cache.hpp"
#include "medforge/backends/interfaces.hpp"
#include "medforge/backends/mock.hpp"

namespace medforge::backends {

/// Builds the configured stack: [limiter [cache [mock|http]]].
std::unique_ptr<ChatBackend> make_chat_backend(const BackendConfig& cfg);
std::unique_ptr<EmbedBackend> make_embed_backend(const BackendConfig& cfg);
std::unique_ptr<RewardBackend> make_reward_backend(const BackendConfig& cfg);

struct TrainerHandle {
    std::unique_ptr<TrainerBackend> backend;
    /// Non-null when the stack bottoms out in a mock; exposes audit hooks.
    MockTrainerBackend* mock = nullptr;
};

/// The trainer is never concurrency-limited: callers must serialize
/// train/generate/restore. answer_key is only consumed in oracle mode.
TrainerHandle make_trainer_backend(const BackendConfig& cfg, MockTrainerMode mock_mode,
                                   std::map<std::string, std::string> answer_key = {});

}  // namespace medforge::backends
