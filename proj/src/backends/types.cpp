// SPDX-License-Identifier: Apache-2.0

#include "medforge/backends/types.hpp"

#include <json.hpp>

#include "medforge/common/digest.hpp"
#include "medforge/common/errors.hpp"

namespace medforge::backends {

using nlohmann::json;

void BackendConfig::validate(const std::string& scope) const {
    if (max_concurrency < 1) {
        throw ConfigError(scope + ": max_concurrency must be >= 1");
    }
    if (max_retries < 0) {
        throw ConfigError(scope + ": max_retries must be >= 0");
    }
    if (timeout_ms < 1) {
        throw ConfigError(scope + ": timeout_ms must be >= 1");
    }
    if (mode == BackendMode::http && endpoint_url.empty()) {
        throw ConfigError(scope + ": http mode requires endpoint_url");
    }
    if (cache_mode != CacheMode::off && cache_path.empty()) {
        throw ConfigError(scope + ": cache_mode " + cache_mode_name(cache_mode) +
                          " requires cache_path");
    }
    if (mock_embed_dim < 2) {
        throw ConfigError(scope + ": mock_embed_dim must be >= 2");
    }
}

const char* cache_mode_name(CacheMode mode) {
    switch (mode) {
        case CacheMode::off:
            return "off";
        case CacheMode::record:
            return "record";
        case CacheMode::replay:
            return "replay";
    }
    return "off";
}

CacheMode cache_mode_from_name(const std::string& name) {
    if (name == "off") return CacheMode::off;
    if (name == "record") return CacheMode::record;
    if (name == "replay") return CacheMode::replay;
    throw ConfigError("unknown cache_mode: " + name);
}

const char* session_state_name(SessionState state) {
    return state == SessionState::clean ? "clean" : "adapted";
}

std::string chat_request_digest(const ChatRequest& req) {
    json canon{{"kind", "chat"},
               {"system", req.system_prompt},
               {"user", req.user_prompt},
               {"model", req.model_id},
               {"temperature", req.temperature},
               {"max_tokens", req.max_tokens}};
    return sha256_hex(canon.dump());
}

std::string embed_request_digest(const std::string& model_id, const std::vector<std::string>& texts) {
    json canon{{"kind", "embed"}, {"model", model_id}, {"inputs", texts}};
    return sha256_hex(canon.dump());
}

std::string reward_request_digest(const std::string& model_id, const std::string& prompt,
                                  const std::string& response) {
    json canon{{"kind", "reward"}, {"model", model_id}, {"prompt", prompt}, {"response", response}};
    return sha256_hex(canon.dump());
}

std::string trainer_train_digest(const TrainerJobSpec& spec) {
    json samples = json::array();
    for (const auto& [prompt, response] : spec.samples) {
        samples.push_back(json::array({prompt, response}));
    }
    json canon{{"kind", "trainer.train"}, {"samples", samples}, {"hyperparams", spec.hyperparams}};
    return sha256_hex(canon.dump());
}

std::string trainer_generate_digest(const TrainerSession& session, const std::string& prompt) {
    json canon{{"kind", "trainer.generate"},
               {"state", session_state_name(session.state)},
               {"prompt", prompt}};
    return sha256_hex(canon.dump());
}

}  // namespace medforge::backends
