// SPDX-License-Identifier: Apache-2.0

#include "medforge/common/digest.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <vector>

#include "medforge/common/errors.hpp"

namespace medforge {

namespace {

std::array<unsigned char, 32> sha256_raw(std::string_view data) {
    std::array<unsigned char, 32> out{};
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx, data.data(), data.size()) != 1 ||
        EVP_DigestFinal_ex(ctx, out.data(), &len) != 1) {
        EVP_MD_CTX_free(ctx);
        throw Error("sha256 computation failed");
    }
    EVP_MD_CTX_free(ctx);
    return out;
}

std::string to_hex(const unsigned char* bytes, size_t n) {
    static const char* digits = "0123456789abcdef";
    std::string hex;
    hex.reserve(n * 2);
    for (size_t i = 0; i < n; ++i) {
        hex.push_back(digits[bytes[i] >> 4]);
        hex.push_back(digits[bytes[i] & 0x0f]);
    }
    return hex;
}

}  // namespace

std::string sha256_hex(std::string_view data) {
    auto raw = sha256_raw(data);
    return to_hex(raw.data(), raw.size());
}

std::string sha256_file_hex(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot read file for digest: " + path);
    }
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
        EVP_MD_CTX_free(ctx);
        throw Error("sha256 init failed");
    }
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        std::streamsize got = in.gcount();
        if (got > 0 && EVP_DigestUpdate(ctx, buf.data(), static_cast<size_t>(got)) != 1) {
            EVP_MD_CTX_free(ctx);
            throw Error("sha256 update failed");
        }
    }
    std::array<unsigned char, 32> out{};
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx, out.data(), &len) != 1) {
        EVP_MD_CTX_free(ctx);
        throw Error("sha256 final failed");
    }
    EVP_MD_CTX_free(ctx);
    return to_hex(out.data(), out.size());
}

std::uint64_t sha256_prefix_u64(std::string_view data) {
    auto raw = sha256_raw(data);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
        v = (v << 8) | raw[static_cast<size_t>(i)];
    }
    return v;
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view tag) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%020llu:", static_cast<unsigned long long>(base));
    std::string key = std::string(buf) + std::string(tag);
    return sha256_prefix_u64(key);
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), ":%llu", static_cast<unsigned long long>(index));
    return derive_seed(base, std::string(tag) + buf);
}

}  // namespace medforge
