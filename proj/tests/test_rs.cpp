#include "oracles.hpp"

#include "ulp/rs.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <bit>
#include <numeric>
#include <random>

using namespace ulp;

namespace {

std::vector<Bytes> random_payloads(std::mt19937_64& rng, std::size_t k, std::size_t len) {
    std::vector<Bytes> out;
    for (std::size_t i = 0; i < k; ++i) out.push_back(oracle::random_bytes(rng, len));
    return out;
}

std::vector<rs::ConstBytes> views(const std::vector<Bytes>& v) { return {v.begin(), v.end()}; }

/// Full codeword: data followed by parity.
std::vector<Bytes> codeword(const rs::ErasureCode& code, const std::vector<Bytes>& data) {
    auto cw = data;
    for (auto& p : rs::encode(code, views(data))) cw.push_back(std::move(p));
    return cw;
}

std::map<std::size_t, rs::ConstBytes> received_without(const std::vector<Bytes>& cw, std::uint64_t erased_mask) {
    std::map<std::size_t, rs::ConstBytes> out;
    for (std::size_t s = 0; s < cw.size(); ++s) {
        if (!(erased_mask >> s & 1)) out.emplace(s, cw[s]);
    }
    return out;
}

// Encode a byte column by a direct matrix-vector product with the full generator.
Bytes oracle_parity(const rs::ErasureCode& code, const std::vector<Bytes>& data, std::size_t j) {
    auto row = code.generator_row(code.k() + j);
    Bytes out(data[0].size(), 0);
    for (std::size_t t = 0; t < out.size(); ++t)
        for (std::size_t i = 0; i < code.k(); ++i) out[t] ^= oracle::clmul_mod(row[i], data[i][t]);
    return out;
}

void exhaustive_erasures(std::size_t k, std::size_t m, std::size_t len, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    rs::ErasureCode code(k, m);
    const auto data = random_payloads(rng, k, len);
    const auto cw = codeword(code, data);
    const std::size_t n = k + m;
    std::size_t checked = 0;
    for (std::uint64_t mask = 0; mask < (1ull << n); ++mask) {
        if (static_cast<std::size_t>(std::popcount(mask)) > m) continue;
        auto result = rs::decode(code, received_without(cw, mask));
        auto* rec = std::get_if<rs::Recovered>(&result);
        ASSERT_NE(rec, nullptr) << "mask " << mask;
        ASSERT_EQ(rec->data, data) << "mask " << mask;
        ++checked;
    }
    EXPECT_GT(checked, 0u);
}

} // namespace

TEST(Generator, SystematicAndMds) {
    for (auto [k, m] : {std::pair<std::size_t, std::size_t>{4, 2}, {8, 4}, {5, 3}}) {
        rs::Matrix g = rs::systematic_generator(k, m);
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < k; ++j) ASSERT_EQ(g(i, j), i == j ? 1 : 0);
        // Every k x k row subset is invertible.
        const std::size_t n = k + m;
        for (std::uint64_t mask = 0; mask < (1ull << n); ++mask) {
            if (static_cast<std::size_t>(std::popcount(mask)) != k) continue;
            rs::Matrix sub(k, k);
            std::size_t r = 0;
            for (std::size_t s = 0; s < n; ++s) {
                if (!(mask >> s & 1)) continue;
                for (std::size_t j = 0; j < k; ++j) sub(r, j) = g(s, j);
                ++r;
            }
            ASSERT_TRUE(rs::invert(sub).has_value()) << "k=" << k << " mask " << mask;
        }
    }
}

TEST(Generator, RejectsOversizeCodes) {
    EXPECT_THROW(rs::ErasureCode(200, 56), CodecError);
    EXPECT_THROW(rs::ErasureCode(0, 3), CodecError);
    EXPECT_NO_THROW(rs::ErasureCode(223, 32));
}

TEST(Encode, SingleDataSingleParityRepeatsData) {
    rs::ErasureCode code(1, 1);
    EXPECT_EQ(code.parity()(0, 0), 1);
    Bytes d{1, 2, 250};
    std::vector<Bytes> data{d};
    auto parity = rs::encode(code, views(data));
    ASSERT_EQ(parity.size(), 1u);
    EXPECT_EQ(parity[0], d);
}

TEST(Encode, ZeroDataZeroParity) {
    rs::ErasureCode code(6, 3);
    std::vector<Bytes> data(6, Bytes(40, 0));
    for (const auto& p : rs::encode(code, views(data))) EXPECT_EQ(p, Bytes(40, 0));
}

TEST(Encode, MatchesMatrixVectorOracle) {
    std::mt19937_64 rng(31);
    rs::ErasureCode code(10, 5);
    auto data = random_payloads(rng, 10, 64);
    auto parity = rs::encode(code, views(data));
    for (std::size_t j = 0; j < 5; ++j) EXPECT_EQ(parity[j], oracle_parity(code, data, j));
}

TEST(Encode, LengthMismatch) {
    rs::ErasureCode code(2, 1);
    std::vector<Bytes> data{Bytes(3), Bytes(4)};
    EXPECT_THROW(rs::encode(code, views(data)), CodecError);
    std::vector<Bytes> one{Bytes(3)};
    EXPECT_THROW(rs::encode(code, views(one)), CodecError);
}

TEST(Decode, Exhaustive_6_4) { exhaustive_erasures(4, 2, 392, 41); }

TEST(Decode, Exhaustive_12_8) { exhaustive_erasures(8, 4, 64, 42); }

TEST(Decode, NoErasuresPassThrough) {
    std::mt19937_64 rng(43);
    rs::ErasureCode code(5, 2);
    auto data = random_payloads(rng, 5, 17);
    auto result = rs::decode(code, received_without(codeword(code, data), 0));
    ASSERT_TRUE(std::holds_alternative<rs::Recovered>(result));
    EXPECT_EQ(std::get<rs::Recovered>(result).data, data);
    EXPECT_EQ(std::get<rs::Recovered>(result).rebuilt, 0u);
}

TEST(Decode, BeyondCapabilitySalvagesSystematic) {
    std::mt19937_64 rng(44);
    rs::ErasureCode code(8, 4);
    auto data = random_payloads(rng, 8, 32);
    auto cw = codeword(code, data);
    // Lose data 1, 4, 6 and parity 8, 10: five erasures, seven symbols left.
    const std::uint64_t mask = (1u << 1) | (1u << 4) | (1u << 6) | (1u << 8) | (1u << 10);
    auto result = rs::decode(code, received_without(cw, mask));
    auto* u = std::get_if<rs::Unrecoverable>(&result);
    ASSERT_NE(u, nullptr);
    ASSERT_EQ(u->salvaged.size(), 5u);
    for (std::size_t i : {0u, 2u, 3u, 5u, 7u}) EXPECT_EQ(u->salvaged.at(i), data[i]);
}

TEST(Decode, RandomLargeCode) {
    std::mt19937_64 rng(45);
    rs::ErasureCode code(223, 32);
    auto data = random_payloads(rng, 223, 48);
    auto cw = codeword(code, data);
    std::vector<std::size_t> idx(255);
    std::iota(idx.begin(), idx.end(), 0);
    for (int trial = 0; trial < 30; ++trial) {
        std::shuffle(idx.begin(), idx.end(), rng);
        std::map<std::size_t, rs::ConstBytes> rx;
        for (std::size_t s = 32; s < 255; ++s) rx.emplace(idx[s], cw[idx[s]]);
        auto result = rs::decode(code, rx);
        ASSERT_TRUE(std::holds_alternative<rs::Recovered>(result));
        ASSERT_EQ(std::get<rs::Recovered>(result).data, data);
    }
}

TEST(Decode, BadInput) {
    rs::ErasureCode code(3, 2);
    Bytes a(4), b(5);
    EXPECT_THROW(rs::decode(code, {{0, a}, {7, a}}), CodecError);
    EXPECT_THROW(rs::decode(code, {{0, a}, {1, b}}), CodecError);
}

TEST(CodewordGroup, SharesCodes) {
    rs::CodewordGroup g1({{0, 0}, {0, 1}}, 2);
    rs::CodewordGroup g2({{1, 0}, {1, 1}}, 2);
    EXPECT_EQ(g1.code.get(), g2.code.get());
    EXPECT_EQ(g1.n(), 4u);
}
