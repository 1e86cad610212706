#ifndef POGO_HASH_HPP
#define POGO_HASH_HPP

#include <array>
#include <cstdint>
#include <span>
#include <string>

#include <openssl/sha.h>

#include "pogo/bytes.hpp"

namespace pogo {

// Single 256-bit hash used everywhere a commitment, seed, key or content id
// is needed. One function system-wide keeps every recomputation rule simple.
using Hash256 = std::array<uint8_t, 32>;

inline Hash256 sha256(std::span<const uint8_t> data) {
    Hash256 out;
    SHA256(data.data(), data.size(), out.data());
    return out;
}

inline Hash256 sha256(const Bytes& data) {
    return sha256(std::span<const uint8_t>(data.data(), data.size()));
}

inline std::string to_hex(const Hash256& h) {
    static const char* digits = "0123456789abcdef";
    std::string s;
    s.reserve(64);
    for (uint8_t b : h) {
        s.push_back(digits[b >> 4]);
        s.push_back(digits[b & 0xf]);
    }
    return s;
}

inline Hash256 from_hex(const std::string& s) {
    if (s.size() != 64) throw std::runtime_error("hash hex: expected 64 chars");
    auto nib = [](char c) -> uint8_t {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        throw std::runtime_error("hash hex: bad digit");
    };
    Hash256 h;
    for (size_t i = 0; i < 32; ++i) h[i] = static_cast<uint8_t>((nib(s[2 * i]) << 4) | nib(s[2 * i + 1]));
    return h;
}

} // namespace pogo

#endif // POGO_HASH_HPP
