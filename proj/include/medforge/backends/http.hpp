// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "medforge/backends/interfaces.hpp"
#include "medforge/backends/types.hpp"

namespace medforge::backends {

/// Splits "http://host:port/some/path" into (scheme://host:port, /some/path).
/// Throws ConfigError on malformed URLs.
std::pair<std::string, std::string> split_url(const std::string& url);

/// Chat client speaking the de-facto open chat-completions protocol:
/// POST {model, messages[{role, content}], temperature, max_tokens},
/// response field choices[0].message.content. Transient failures
/// (connect errors, 429, 5xx) retry with exponential backoff up to
/// max_retries; other 4xx raise BackendRefusal immediately.
class HttpChatBackend : public ChatBackend {
public:
    explicit HttpChatBackend(BackendConfig cfg);

    ChatResponse complete(const ChatRequest& req) override;

private:
    BackendConfig cfg_;
};

/// Embedding client: POST {model, input[list]}, response data[i].embedding,
/// order-aligned. Raises DimensionMismatch when the backend returns
/// inconsistent dimensions.
class HttpEmbedBackend : public EmbedBackend {
public:
    explicit HttpEmbedBackend(BackendConfig cfg);

    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override;

private:
    BackendConfig cfg_;
};

/// Reward client: POST {model, prompt, response} -> {score}.
class HttpRewardBackend : public RewardBackend {
public:
    explicit HttpRewardBackend(BackendConfig cfg);

    RewardScore score(const std::string& prompt, const std::string& response) override;

private:
    BackendConfig cfg_;
};

/// Trainer client against a fine-tune service exposing
/// POST {base}/train, {base}/generate and {base}/restore. Any transport
/// failure surfaces as TrainerUnavailable; the session state machine is
/// also enforced client-side.
class HttpTrainerBackend : public TrainerBackend {
public:
    explicit HttpTrainerBackend(BackendConfig cfg);

    TrainerSession train(const TrainerJobSpec& spec, TrainerSession session) override;
    std::string generate(const TrainerSession& session, const std::string& prompt) override;
    TrainerSession restore(TrainerSession session) override;

private:
    std::string post_json(const std::string& path, const std::string& body);

    BackendConfig cfg_;
};

}  // namespace medforge::backends
