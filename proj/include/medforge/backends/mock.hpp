// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "medforge/backends/interfaces.hpp"

namespace medforge::backends {

/// Deterministic chat mock. The reply is a pure function of (seed, request),
/// never of call order, so any call sequence is bit-reproducible across
/// process runs and identical requests always yield identical replies.
///
/// The mock recognizes the pipeline's prompt families and answers each with
/// schema-valid output: instruction generation -> {"question1","question2"},
/// scoring -> an in-range score card, two-style answers -> {"answer1","answer2"},
/// long-form reasoning -> Thought/Summarization text, and department
/// classification -> one of the department names offered by the prompt.
class MockChatBackend : public ChatBackend {
public:
    explicit MockChatBackend(std::uint64_t seed) : seed_(seed) {}

    ChatResponse complete(const ChatRequest& req) override;

private:
    std::uint64_t seed_;
};

/// Deterministic embedding mock. Vectors are unit-normalized (cosine
/// similarity degenerates to a dot product) and depend only on
/// (seed, model_id, text).
class MockEmbedBackend : public EmbedBackend {
public:
    MockEmbedBackend(std::uint64_t seed, int dim, std::string model_id = "mock-embed")
        : seed_(seed), dim_(dim), model_id_(std::move(model_id)) {}

    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override;

private:
    std::uint64_t seed_;
    int dim_;
    std::string model_id_;
};

/// Deterministic reward mock; scalar in [0, 1), pure function of
/// (seed, prompt, response).
class MockRewardBackend : public RewardBackend {
public:
    explicit MockRewardBackend(std::uint64_t seed) : seed_(seed) {}

    RewardScore score(const std::string& prompt, const std::string& response) override;

private:
    std::uint64_t seed_;
};

/// Mock trainer behavior for generate().
enum class MockTrainerMode {
    /// Reply encodes the session state and the digest of the last trained
    /// samples, so isolation tests can detect adaptation leakage.
    echo,
    /// Reply answers the benchmark gold letter iff the session is adapted,
    /// and an unparseable refusal otherwise. Requires an answer key mapping
    /// question stems to gold letters.
    oracle,
};

/// In-process trainer with a full call audit log. Enforces the session
/// state machine and records (samples digest, hyperparams) per train call.
class MockTrainerBackend : public TrainerBackend {
public:
    explicit MockTrainerBackend(std::uint64_t seed, MockTrainerMode mode = MockTrainerMode::echo)
        : seed_(seed), mode_(mode) {}

    TrainerSession train(const TrainerJobSpec& spec, TrainerSession session) override;
    std::string generate(const TrainerSession& session, const std::string& prompt) override;
    TrainerSession restore(TrainerSession session) override;

    /// stem -> gold letter, used in oracle mode.
    void set_answer_key(std::map<std::string, std::string> key);

    /// Chronological operation names: "train", "generate", "restore".
    std::vector<std::string> call_log() const;

    struct TrainAudit {
        std::string samples_digest;
        std::map<std::string, std::string> hyperparams;
    };
    std::vector<TrainAudit> train_audits() const;

private:
    std::uint64_t seed_;
    MockTrainerMode mode_;
    mutable std::mutex mutex_;
    std::vector<std::string> calls_;
    std::vector<TrainAudit> audits_;
    std::string last_samples_digest_;
    std::map<std::string, std::string> answer_key_;
};

}  // namespace medforge::backends
