// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <semaphore>

#include "medforge/backends/interfaces.hpp"

namespace medforge::backends {

/// Bounds the number of in-flight requests for one backend. Placed as the
/// outermost decorator so the bound covers cache and transport alike.
class InFlightGate {
public:
    explicit InFlightGate(int max_in_flight) : sem_(max_in_flight) {}

    class Pass {
    public:
        explicit Pass(InFlightGate& gate) : gate_(gate) { gate_.sem_.acquire(); }
        ~Pass() { gate_.sem_.release(); }
        Pass(const Pass&) = delete;
        Pass& operator=(const Pass&) = delete;

    private:
        InFlightGate& gate_;
    };

private:
    std::counting_semaphore<> sem_;
};

class LimitedChatBackend : public ChatBackend {
public:
    LimitedChatBackend(std::unique_ptr<ChatBackend> inner, int max_in_flight)
        : inner_(std::move(inner)), gate_(max_in_flight) {}

    ChatResponse complete(const ChatRequest& req) override {
        InFlightGate::Pass pass(gate_);
        return inner_->complete(req);
    }

private:
    std::unique_ptr<ChatBackend> inner_;
    InFlightGate gate_;
};

class LimitedEmbedBackend : public EmbedBackend {
public:
    LimitedEmbedBackend(std::unique_ptr<EmbedBackend> inner, int max_in_flight)
        : inner_(std::move(inner)), gate_(max_in_flight) {}

    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override {
        InFlightGate::Pass pass(gate_);
        return inner_->embed(texts);
    }

private:
    std::unique_ptr<EmbedBackend> inner_;
    InFlightGate gate_;
};

class LimitedRewardBackend : public RewardBackend {
public:
    LimitedRewardBackend(std::unique_ptr<RewardBackend> inner, int max_in_flight)
        : inner_(std::move(inner)), gate_(max_in_flight) {}

    RewardScore score(const std::string& prompt, const std::string& response) override {
        InFlightGate::Pass pass(gate_);
        return inner_->score(prompt, response);
    }

private:
    std::unique_ptr<RewardBackend> inner_;
    InFlightGate gate_;
};

}  // namespace medforge::backends
