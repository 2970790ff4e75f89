#include "oracles.hpp"

#include "ulp/ftb.hpp"
#include "ulp/tensor.hpp"

#include <gtest/gtest.h>

#include <limits>
#include <random>

using namespace ulp;

namespace {

FeatureTensor random_tensor(std::mt19937_64& rng, Shape s, float lo = -3.0f, float hi = 5.0f) {
    std::uniform_real_distribution<float> d(lo, hi);
    std::vector<float> v(s.size());
    for (auto& x : v) x = d(rng);
    return FeatureTensor(s, std::move(v));
}

} // namespace

TEST(Quantize, EndpointsAndMidpoint) {
    FeatureTensor t({1, 1, 3}, {-2.0f, 6.0f, 2.0f});
    QuantizedTensor q = quantize(t);
    EXPECT_EQ(q.q_min(), -2.0f);
    EXPECT_EQ(q.q_max(), 6.0f);
    EXPECT_EQ(q.codes()[0], 0);
    EXPECT_EQ(q.codes()[1], 255);
    // (2 + 2) / 8 * 255 = 127.5, half away from zero.
    EXPECT_EQ(oracle::quantize_scalar(2.0, -2.0, 6.0), 128);
    EXPECT_EQ(q.codes()[2], 128);
}

TEST(Quantize, MatchesScalarOracle) {
    std::mt19937_64 rng(7);
    FeatureTensor t = random_tensor(rng, {8, 8, 4});
    QuantizedTensor q = quantize(t);
    for (std::size_t k = 0; k < t.data().size(); ++k) {
        ASSERT_EQ(q.codes()[k], oracle::quantize_scalar(t.data()[k], q.q_min(), q.q_max())) << k;
    }
}

TEST(Quantize, ConstantTensor) {
    FeatureTensor t({2, 2, 1}, {1.5f, 1.5f, 1.5f, 1.5f});
    QuantizedTensor q = quantize(t);
    EXPECT_EQ(q.q_min(), 1.5f);
    EXPECT_EQ(q.q_max(), 1.5f);
    for (auto c : q.codes()) EXPECT_EQ(c, 0);
    const auto back = dequantize(q);
    for (auto v : back.data()) EXPECT_EQ(v, 1.5f);
}

TEST(Quantize, RejectsNonFinite) {
    EXPECT_THROW(FeatureTensor({1, 1, 2}, {1.0f, std::numeric_limits<float>::quiet_NaN()}), InvalidTensorError);
    EXPECT_THROW(FeatureTensor({1, 1, 1}, {std::numeric_limits<float>::infinity()}), InvalidTensorError);
    EXPECT_THROW(FeatureTensor({1, 2, 1}, {1.0f}), InvalidTensorError);
}

TEST(Dequantize, Endpoints) {
    QuantizedTensor q({1, 1, 2}, {0, 255}, -2.0f, 6.0f);
    auto t = dequantize(q);
    EXPECT_EQ(t.data()[0], -2.0f);
    EXPECT_EQ(t.data()[1], 6.0f);
}

TEST(Dequantize, ErrorBoundProperty) {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<std::uint32_t> dim(1, 12);
    for (int trial = 0; trial < 100; ++trial) {
        Shape s{dim(rng), dim(rng), dim(rng)};
        FeatureTensor t = random_tensor(rng, s, -10.0f * (trial % 3), 1.0f + trial);
        QuantizedTensor q = quantize(t);
        FeatureTensor back = dequantize(q);
        const double bound = (static_cast<double>(q.q_max()) - q.q_min()) / 255.0 / 2.0 + 1e-6;
        for (std::size_t k = 0; k < t.data().size(); ++k) {
            ASSERT_LE(std::abs(static_cast<double>(back.data()[k]) - t.data()[k]), bound);
        }
    }
}

TEST(Layout, ChannelMajorIndex) {
    Shape s{3, 4, 2};
    EXPECT_EQ(s.index(0, 0, 0), 0u);
    EXPECT_EQ(s.index(0, 1, 0), 1u);
    EXPECT_EQ(s.index(1, 0, 0), 4u);
    EXPECT_EQ(s.index(0, 0, 1), 12u);
    EXPECT_EQ(s.index(2, 3, 1), 1u * 12 + 2 * 4 + 3);
}

TEST(Ftb, ScalarRealFileLength) {
    FeatureTensor t({1, 1, 1}, {3.5f});
    Bytes b = ftb::write_tensor(t);
    // magic(4) + dtype(1) + h,w,c(12) + one real32 payload element(4)
    EXPECT_EQ(b.size(), 21u);
    EXPECT_EQ(b[4], 0);
    auto back = ftb::read_real_tensor(b);
    EXPECT_EQ(back, t);
}

TEST(Ftb, QuantizedHeaderCarriesRange) {
    QuantizedTensor q({2, 1, 1}, {3, 250}, -1.25f, 4.0f);
    Bytes b = ftb::write_tensor(q);
    EXPECT_EQ(b.size(), 4u + 1 + 12 + 8 + 2);
    EXPECT_EQ(b[4], 1);
    EXPECT_EQ(ftb::read_quantized_tensor(b), q);
}

TEST(Ftb, LittleEndianHeaderBytes) {
    FeatureTensor t({2, 3, 1}, std::vector<float>(6, 0.0f));
    Bytes b = ftb::write_tensor(t);
    ASSERT_GE(b.size(), 17u);
    EXPECT_EQ(std::string(b.begin(), b.begin() + 4), "FTB1");
    EXPECT_EQ(b[5], 2);
    EXPECT_EQ(b[6], 0);
    EXPECT_EQ(b[9], 3);
    EXPECT_EQ(b[13], 1);
}

TEST(Ftb, Errors) {
    EXPECT_THROW(ftb::read_tensor(Bytes{}), FormatError);

    FeatureTensor t({2, 2, 1}, {1, 2, 3, 4});
    Bytes good = ftb::write_tensor(t);

    Bytes bad_magic = good;
    bad_magic[0] = 'X';
    try {
        ftb::read_tensor(bad_magic);
        FAIL();
    } catch (const FormatError& e) {
        EXPECT_EQ(e.offset(), 0u);
    }

    Bytes truncated(good.begin(), good.end() - 1);
    try {
        ftb::read_tensor(truncated);
        FAIL();
    } catch (const FormatError& e) {
        EXPECT_EQ(e.offset(), 17u);
    }

    Bytes trailing = good;
    trailing.push_back(0);
    EXPECT_THROW(ftb::read_tensor(trailing), FormatError);

    EXPECT_THROW(ftb::read_quantized_tensor(good), FormatError);
    EXPECT_THROW(ftb::read_real_tensor(ftb::write_tensor(quantize(t))), FormatError);

    Bytes bad_dtype = good;
    bad_dtype[4] = 7;
    EXPECT_THROW(ftb::read_tensor(bad_dtype), FormatError);
}

TEST(Ftb, RoundTripProperty) {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<std::uint32_t> dim(1, 9);
    for (int trial = 0; trial < 100; ++trial) {
        FeatureTensor t = random_tensor(rng, {dim(rng), dim(rng), dim(rng)});
        Bytes b = ftb::write_tensor(t);
        auto any = ftb::read_tensor(b);
        ASSERT_EQ(std::get<FeatureTensor>(any), t);
        ASSERT_EQ(ftb::write_tensor(std::get<FeatureTensor>(any)), b);

        QuantizedTensor q = quantize(t);
        Bytes qb = ftb::write_tensor(q);
        ASSERT_EQ(ftb::read_quantized_tensor(qb), q);
        ASSERT_EQ(ftb::write_tensor(ftb::read_quantized_tensor(qb)), qb);
    }
}

TEST(Ftb, ReferenceGeometryUint8BitExact) {
    std::mt19937_64 rng(56);
    auto codes = oracle::random_bytes(rng, 56 * 56 * 256);
    QuantizedTensor q({56, 56, 256}, codes, -0.75f, 9.5f);
    Bytes b = ftb::write_tensor(q);
    EXPECT_EQ(b.size(), 25u + 56 * 56 * 256);
    EXPECT_EQ(ftb::read_quantized_tensor(b), q);
    EXPECT_EQ(ftb::write_tensor(ftb::read_quantized_tensor(b)), b);
}
