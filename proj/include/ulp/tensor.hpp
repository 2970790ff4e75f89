#pragma once

#include "ulp/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace ulp {

/// Tensor extent: h rows, w columns, c channels.
struct Shape {
    std::uint32_t h = 0;
    std::uint32_t w = 0;
    std::uint32_t c = 0;

    constexpr std::size_t size() const noexcept {
        return static_cast<std::size_t>(h) * w * c;
    }
    constexpr std::size_t plane() const noexcept { return static_cast<std::size_t>(h) * w; }

    /// Channel-major flat index of row x, column y, channel j.
    constexpr std::size_t index(std::size_t x, std::size_t y, std::size_t j) const noexcept {
        return j * plane() + x * w + y;
    }

    friend constexpr bool operator==(const Shape&, const Shape&) = default;
};

inline std::string to_string(const Shape& s) {
    return std::to_string(s.h) + "x" + std::to_string(s.w) + "x" + std::to_string(s.c);
}

inline void validate_shape(const Shape& s) {
    if (s.h == 0 || s.w == 0 || s.c == 0) {
        throw InvalidTensorError("tensor dimensions must be positive, got " + to_string(s));
    }
}

/// Rounds half away from zero; std::round has exactly this contract.
inline double round_half_away(double v) noexcept { return std::round(v); }

/// Channel-major real32 tensor. The tag keeps feature maps and importance maps
/// from being mixed up at call sites.
template <typename Tag>
class RealTensor {
public:
    RealTensor() = default;

    RealTensor(Shape shape, std::vector<float> data) : shape_(shape), data_(std::move(data)) {
        validate_shape(shape_);
        if (data_.size() != shape_.size()) {
            throw InvalidTensorError("data length " + std::to_string(data_.size()) +
                                     " does not match shape " + to_string(shape_));
        }
        for (std::size_t k = 0; k < data_.size(); ++k) {
            if (!std::isfinite(data_[k])) {
                throw InvalidTensorError("non-finite value at flat index " + std::to_string(k));
            }
        }
    }

    static RealTensor zeros(Shape shape) {
        validate_shape(shape);
        return RealTensor(shape, std::vector<float>(shape.size(), 0.0f));
    }

    const Shape& shape() const noexcept { return shape_; }
    std::span<const float> data() const noexcept { return data_; }

    float at(std::size_t x, std::size_t y, std::size_t j) const {
        return data_[shape_.index(x, y, j)];
    }

    friend bool operator==(const RealTensor&, const RealTensor&) = default;

private:
    Shape shape_;
    std::vector<float> data_;
};

struct FeatureTag {};
using FeatureTensor = RealTensor<FeatureTag>;

/// Codes outside [q_min, q_max] saturate; 0.0 maps to the code nearest feature value 0.
inline std::uint8_t quantize_value(float v, float q_min, float q_max) noexcept {
    if (q_max == q_min) return 0;
    double scaled = (static_cast<double>(v) - q_min) / (static_cast<double>(q_max) - q_min) * 255.0;
    return static_cast<std::uint8_t>(std::clamp(round_half_away(scaled), 0.0, 255.0));
}

/// 8-bit codes with the min/max needed to map them back to feature values.
class QuantizedTensor {
public:
    QuantizedTensor() = default;

    QuantizedTensor(Shape shape, std::vector<std::uint8_t> codes, float q_min, float q_max)
        : shape_(shape), codes_(std::move(codes)), q_min_(q_min), q_max_(q_max) {
        validate_shape(shape_);
        if (codes_.size() != shape_.size()) {
            throw InvalidTensorError("code length " + std::to_string(codes_.size()) +
                                     " does not match shape " + to_string(shape_));
        }
        if (!std::isfinite(q_min_) || !std::isfinite(q_max_) || q_min_ > q_max_) {
            throw InvalidTensorError("quantization range must be finite with q_min <= q_max");
        }
    }

    const Shape& shape() const noexcept { return shape_; }
    std::span<const std::uint8_t> codes() const noexcept { return codes_; }
    float q_min() const noexcept { return q_min_; }
    float q_max() const noexcept { return q_max_; }

    /// Largest |dequantize(quantize(v)) - v| the range allows.
    double half_step() const noexcept {
        return (static_cast<double>(q_max_) - q_min_) / 510.0;
    }

    /// Code whose dequantized value is closest to feature value 0.0.
    std::uint8_t zero_code() const noexcept { return quantize_value(0.0f, q_min_, q_max_); }

    friend bool operator==(const QuantizedTensor&, const QuantizedTensor&) = default;

private:
    Shape shape_;
    std::vector<std::uint8_t> codes_;
    float q_min_ = 0.0f;
    float q_max_ = 0.0f;
};

inline float dequantize_value(std::uint8_t code, float q_min, float q_max) noexcept {
    if (q_max == q_min) return q_min;
    return static_cast<float>(q_min + code / 255.0 * (static_cast<double>(q_max) - q_min));
}

/// Per-tensor min-max uniform quantization to 8 bits.
inline QuantizedTensor quantize(const FeatureTensor& t) {
    auto data = t.data();
    if (data.empty()) throw InvalidTensorError("cannot quantize an empty tensor");
    for (std::size_t k = 0; k < data.size(); ++k) {
        if (!std::isfinite(data[k])) {
            throw InvalidTensorError("non-finite value at flat index " + std::to_string(k));
        }
    }
    auto [lo, hi] = std::minmax_element(data.begin(), data.end());
    const float q_min = *lo;
    const float q_max = *hi;
    std::vector<std::uint8_t> codes(data.size());
    std::transform(data.begin(), data.end(), codes.begin(),
                   [&](float v) { return quantize_value(v, q_min, q_max); });
    return QuantizedTensor(t.shape(), std::move(codes), q_min, q_max);
}

inline FeatureTensor dequantize(const QuantizedTensor& q) {
    auto codes = q.codes();
    std::vector<float> data(codes.size());
    std::transform(codes.begin(), codes.end(), data.begin(),
                   [&](std::uint8_t c) { return dequantize_value(c, q.q_min(), q.q_max()); });
    return FeatureTensor(q.shape(), std::move(data));
}

/// Mean squared error between two tensors of equal shape.
template <typename Tag>
double mse(const RealTensor<Tag>& a, const RealTensor<Tag>& b) {
    if (a.shape() != b.shape()) {
        throw ShapeError("mse: shape " + to_string(a.shape()) + " vs " + to_string(b.shape()));
    }
    auto x = a.data();
    auto y = b.data();
    double acc = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        double d = static_cast<double>(x[k]) - y[k];
        acc += d * d;
    }
    return x.empty() ? 0.0 : acc / static_cast<double>(x.size());
}

} // namespace ulp
