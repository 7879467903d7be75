// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace medforge {

/// SHA-256 of arbitrary bytes, lowercase hex.
std::string sha256_hex(std::string_view data);

/// SHA-256 of a file's contents, lowercase hex. Throws Error when the file
/// cannot be read.
std::string sha256_file_hex(const std::string& path);

/// First 8 bytes of SHA-256(data), big-endian, as an unsigned 64-bit value.
/// Used to derive stable sub-seeds from a base seed plus a role tag.
std::uint64_t sha256_prefix_u64(std::string_view data);

/// Stable sub-seed derivation: mixes a base seed with a textual tag.
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag);

/// Tagged derivation with an index (per-run, per-stage seeds).
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t index);

}  // namespace medforge
