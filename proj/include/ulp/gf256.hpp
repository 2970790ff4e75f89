#pragma once

// GF(2^8) arithmetic over the primitive polynomial x^8 + x^4 + x^3 + x^2 + 1
// (0x11D). Generator alpha = 2.

#include "ulp/error.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>

namespace ulp::gf {

inline constexpr unsigned kPolynomial = 0x11D;

struct Tables {
    std::array<std::uint8_t, 512> exp{};  // doubled so exp[log a + log b] needs no reduction
    std::array<int, 256> log{};
};

inline constexpr Tables make_tables() {
    Tables t;
    unsigned x = 1;
    for (int i = 0; i < 255; ++i) {
        t.exp[i] = static_cast<std::uint8_t>(x);
        t.log[x] = i;
        x <<= 1;
        if (x & 0x100) x ^= kPolynomial;
    }
    for (int i = 255; i < 512; ++i) t.exp[i] = t.exp[i - 255];
    t.log[0] = -1;
    return t;
}

inline constexpr Tables kTables = make_tables();

inline constexpr std::uint8_t add(std::uint8_t a, std::uint8_t b) noexcept { return a ^ b; }

inline constexpr std::uint8_t mul(std::uint8_t a, std::uint8_t b) noexcept {
    if (a == 0 || b == 0) return 0;
    return kTables.exp[kTables.log[a] + kTables.log[b]];
}

inline constexpr std::uint8_t inv(std::uint8_t a) {
    if (a == 0) throw DomainError("gf256: zero has no multiplicative inverse");
    return kTables.exp[255 - kTables.log[a]];
}

inline constexpr std::uint8_t div(std::uint8_t a, std::uint8_t b) { return mul(a, inv(b)); }

/// alpha^e for any non-negative e.
inline constexpr std::uint8_t exp(unsigned e) noexcept { return kTables.exp[e % 255]; }

inline constexpr std::uint8_t pow(std::uint8_t a, unsigned e) noexcept {
    if (e == 0) return 1;
    if (a == 0) return 0;
    return kTables.exp[(static_cast<unsigned>(kTables.log[a]) * e) % 255];
}

/// Full 256x256 product table; row c is the "multiply by c" map.
inline const std::array<std::array<std::uint8_t, 256>, 256>& mul_table() {
    static const auto table = [] {
        std::array<std::array<std::uint8_t, 256>, 256> t{};
        for (unsigned a = 0; a < 256; ++a)
            for (unsigned b = 0; b < 256; ++b)
                t[a][b] = mul(static_cast<std::uint8_t>(a), static_cast<std::uint8_t>(b));
        return t;
    }();
    return table;
}

/// dst[t] ^= c * src[t]
inline void mul_add(std::span<std::uint8_t> dst, std::span<const std::uint8_t> src, std::uint8_t c) {
    if (c == 0) return;
    const std::size_t n = dst.size() < src.size() ? dst.size() : src.size();
    if (c == 1) {
        for (std::size_t t = 0; t < n; ++t) dst[t] ^= src[t];
        return;
    }
    const auto& row = mul_table()[c];
    for (std::size_t t = 0; t < n; ++t) dst[t] ^= row[src[t]];
}

} // namespace ulp::gf
