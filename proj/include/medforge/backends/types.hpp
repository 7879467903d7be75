// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace medforge::backends {

struct ChatRequest {
    std::string system_prompt;
    std::string user_prompt;
    double temperature = 0.0;  // [0, 2]
    int max_tokens = 1024;     // >= 1
    std::string model_id;
};

struct ChatResponse {
    std::string text;
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
    std::int64_t latency_ms = 0;
};

/// Fixed-length embedding; dim is implied by values.size() and must be
/// constant per corpus.
struct EmbeddingVector {
    std::vector<double> values;

    std::size_t dim() const { return values.size(); }
};

struct RewardScore {
    double scalar = 0.0;  // higher = more preferred; always finite
};

struct TrainerJobSpec {
    std::vector<std::pair<std::string, std::string>> samples;  // (prompt, response)
    std::map<std::string, std::string> hyperparams;            // opaque pass-through
};

enum class SessionState { clean, adapted };

struct TrainerSession {
    std::string session_id;
    SessionState state = SessionState::clean;
};

enum class CacheMode { off, record, replay };

enum class BackendMode { mock, http };

struct BackendConfig {
    BackendMode mode = BackendMode::mock;
    std::string endpoint_url;
    std::string model_id;
    std::string api_key_env;  // env var holding the bearer token, if any
    int max_concurrency = 4;  // >= 1
    int max_retries = 2;      // >= 0
    int timeout_ms = 30000;
    int retry_base_delay_ms = 100;
    CacheMode cache_mode = CacheMode::off;
    std::string cache_path;
    std::uint64_t mock_seed = 0;
    int mock_embed_dim = 64;

    /// Throws ConfigError when invariants are violated.
    void validate(const std::string& scope) const;
};

const char* cache_mode_name(CacheMode mode);
CacheMode cache_mode_from_name(const std::string& name);
const char* session_state_name(SessionState state);

// Stable request digests used as replay-cache keys and in audit logs.
// Retry metadata and timestamps are deliberately excluded.
std::string chat_request_digest(const ChatRequest& req);
std::string embed_request_digest(const std::string& model_id, const std::vector<std::string>& texts);
std::string reward_request_digest(const std::string& model_id, const std::string& prompt,
                                  const std::string& response);
std::string trainer_train_digest(const TrainerJobSpec& spec);
std::string trainer_generate_digest(const TrainerSession& session, const std::string& prompt);

}  // namespace medforge::backends
