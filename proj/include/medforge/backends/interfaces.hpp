// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "medforge/backends/types.hpp"

namespace medforge::backends {

/// Chat completion. Implementations must be safely shareable across
/// concurrent callers.
class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual ChatResponse complete(const ChatRequest& req) = 0;
};

/// Text embedding. Output is order-aligned with the input and all vectors
/// share one dimension.
class EmbedBackend {
public:
    virtual ~EmbedBackend() = default;
    virtual std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) = 0;
};

/// Scalar preference scoring of a (prompt, response) pair.
class RewardBackend {
public:
    virtual ~RewardBackend() = default;
    virtual RewardScore score(const std::string& prompt, const std::string& response) = 0;
};

/// Fine-tune / generate / restore. Callers must serialize access; the
/// session state machine admits only clean->adapted (train) and
/// adapted->clean (restore).
class TrainerBackend {
public:
    virtual ~TrainerBackend() = default;
    virtual TrainerSession train(const TrainerJobSpec& spec, TrainerSession session) = 0;
    virtual std::string generate(const TrainerSession& session, const std::string& prompt) = 0;
    virtual TrainerSession restore(TrainerSession session) = 0;
};

}  // namespace medforge::backends
