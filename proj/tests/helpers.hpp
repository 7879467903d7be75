// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <unistd.h>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "medforge/backends/interfaces.hpp"
#include "medforge/common/errors.hpp"

namespace medforge::test {

/// Self-cleaning scratch directory for file-based tests.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        auto base = std::filesystem::temp_directory_path();
        static std::atomic<unsigned> counter{0};
        path_ = base / ("medforge_" + tag + "_" + std::to_string(::getpid()) + "_" +
                        std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string str(const std::string& name) const { return (path_ / name).string(); }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE_MESSAGE(bool(in), ("cannot read " + path));
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

/// Chat stub driven by a caller-provided function of the request; counts
/// calls and can fail the first `fail_first` calls with TransportError.
class ScriptedChat : public backends::ChatBackend {
public:
    explicit ScriptedChat(std::function<std::string(const backends::ChatRequest&)> fn)
        : fn_(std::move(fn)) {}

    backends::ChatResponse complete(const backends::ChatRequest& req) override {
        int n = ++calls_;
        if (n <= fail_first_) {
            throw TransportError("scripted failure");
        }
        backends::ChatResponse resp;
        resp.text = fn_(req);
        return resp;
    }

    int calls() const { return calls_.load(); }
    void fail_first(int n) { fail_first_ = n; }

private:
    std::function<std::string(const backends::ChatRequest&)> fn_;
    std::atomic<int> calls_{0};
    int fail_first_ = 0;
};

/// Counts how often the wrapped backend is actually reached (replay-cache
/// zero-network assertions).
class CountingChat : public backends::ChatBackend {
public:
    explicit CountingChat(backends::ChatBackend& inner) : inner_(inner) {}

    backends::ChatResponse complete(const backends::ChatRequest& req) override {
        ++calls_;
        return inner_.complete(req);
    }

    int calls() const { return calls_.load(); }

private:
    backends::ChatBackend& inner_;
    std::atomic<int> calls_{0};
};

/// Tracks the maximum number of concurrently executing calls.
class InFlightProbeChat : public backends::ChatBackend {
public:
    backends::ChatResponse complete(const backends::ChatRequest&) override {
        int now = ++in_flight_;
        int seen = max_seen_.load();
        while (now > seen && !max_seen_.compare_exchange_weak(seen, now)) {
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
        --in_flight_;
        backends::ChatResponse resp;
        resp.text = "ok";
        return resp;
    }

    int max_seen() const { return max_seen_.load(); }

private:
    std::atomic<int> in_flight_{0};
    std::atomic<int> max_seen_{0};
};

}  // namespace medforge::test
