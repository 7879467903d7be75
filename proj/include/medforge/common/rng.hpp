// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace medforge {

/// Deterministic RNG used for every sampling decision in the pipeline.
///
/// Only the raw mt19937_64 engine is used (its output sequence is fixed by
/// the standard); std::*_distribution adaptors are avoided because their
/// output is implementation-defined and would break cross-toolchain
/// reproducibility of frozen test values.
class DetRng {
public:
    explicit DetRng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform value in [0, n). n must be > 0. Modulo bias is < n / 2^64,
    /// irrelevant at the scales used here.
    std::uint64_t below(std::uint64_t n) { return engine_() % n; }

    /// Uniform double in [0, 1) with 53 bits of precision.
    double unit_double() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    bool coin() { return (engine_() & 1u) != 0; }

    /// In-place Fisher–Yates shuffle (portable, unlike std::shuffle).
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace medforge
