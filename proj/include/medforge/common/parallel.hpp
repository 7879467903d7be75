// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace medforge {

/// Runs fn(i) for i in [0, count) on up to `workers` threads. The callee is
/// responsible for writing its result into a pre-sized slot, so completion
/// order never affects output order. fn must not throw; per-item failures
/// are represented in the result slots.
inline void parallel_for_index(std::size_t count, std::size_t workers,
                               const std::function<void(std::size_t)>& fn) {
    if (count == 0) {
        return;
    }
    if (workers <= 1 || count == 1) {
        for (std::size_t i = 0; i < count; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::size_t n_threads = workers < count ? workers : count;
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= count) {
                    return;
                }
                fn(i);
            }
        });
    }
    for (auto& th : pool) {
        th.join();
    }
}

}  // namespace medforge
