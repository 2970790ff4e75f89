#pragma once

// FTB1 tensor files:
//   "FTB1" | dtype:u8 | h:u32 | w:u32 | c:u32 | [q_min:f32 | q_max:f32 if dtype==1] | payload
// Little-endian throughout. Payload is channel-major, 4 bytes per element for
// real32 and 1 byte per element for uint8 codes.

#include "ulp/bytes.hpp"
#include "ulp/tensor.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <string>
#include <variant>

namespace ulp::ftb {

inline constexpr std::array<std::uint8_t, 4> kMagic = {'F', 'T', 'B', '1'};

enum class DType : std::uint8_t { Real32 = 0, Uint8 = 1 };

inline constexpr std::size_t kHeaderBytes = 4 + 1 + 12;
inline constexpr std::size_t kQuantParamBytes = 8;

struct Header {
    DType dtype = DType::Real32;
    Shape shape;
    float q_min = 0.0f;
    float q_max = 0.0f;

    std::size_t header_bytes() const noexcept {
        return kHeaderBytes + (dtype == DType::Uint8 ? kQuantParamBytes : 0);
    }
    std::size_t payload_bytes() const noexcept {
        return shape.size() * (dtype == DType::Real32 ? 4 : 1);
    }
};

inline Header read_header(ByteReader& in) {
    in.require(4, "magic");
    auto magic = in.raw(4, "magic");
    if (!std::equal(magic.begin(), magic.end(), kMagic.begin())) {
        throw FormatError("bad magic, expected FTB1", 0);
    }
    Header h;
    const std::size_t dtype_at = in.offset();
    const std::uint8_t dtype = in.u8("dtype");
    if (dtype > 1) throw FormatError("unknown dtype " + std::to_string(dtype), dtype_at);
    h.dtype = static_cast<DType>(dtype);
    const std::size_t shape_at = in.offset();
    h.shape.h = in.u32("h");
    h.shape.w = in.u32("w");
    h.shape.c = in.u32("c");
    if (h.shape.h == 0 || h.shape.w == 0 || h.shape.c == 0) {
        throw FormatError("zero dimension in shape " + to_string(h.shape), shape_at);
    }
    if (h.dtype == DType::Uint8) {
        const std::size_t q_at = in.offset();
        h.q_min = in.f32("q_min");
        h.q_max = in.f32("q_max");
        if (!std::isfinite(h.q_min) || !std::isfinite(h.q_max) || h.q_min > h.q_max) {
            throw FormatError("invalid quantization range", q_at);
        }
    }
    return h;
}

inline void write_header(ByteWriter& out, const Header& h) {
    out.raw(kMagic);
    out.u8(static_cast<std::uint8_t>(h.dtype));
    out.u32(h.shape.h);
    out.u32(h.shape.w);
    out.u32(h.shape.c);
    if (h.dtype == DType::Uint8) {
        out.f32(h.q_min);
        out.f32(h.q_max);
    }
}

template <typename Tag>
Bytes write_tensor(const RealTensor<Tag>& t) {
    Header h{DType::Real32, t.shape()};
    ByteWriter out;
    out.reserve(h.header_bytes() + h.payload_bytes());
    write_header(out, h);
    for (float v : t.data()) out.f32(v);
    return std::move(out).take();
}

inline Bytes write_tensor(const QuantizedTensor& q) {
    Header h{DType::Uint8, q.shape(), q.q_min(), q.q_max()};
    ByteWriter out;
    out.reserve(h.header_bytes() + h.payload_bytes());
    write_header(out, h);
    out.raw(q.codes());
    return std::move(out).take();
}

namespace detail {

template <typename Tag>
RealTensor<Tag> read_real_payload(ByteReader& in, const Header& h) {
    in.require(h.payload_bytes(), "real32 payload");
    std::vector<float> data(h.shape.size());
    for (auto& v : data) {
        const std::size_t at = in.offset();
        v = in.f32();
        if (!std::isfinite(v)) throw FormatError("non-finite real32 element", at);
    }
    in.expect_end();
    return RealTensor<Tag>(h.shape, std::move(data));
}

inline QuantizedTensor read_quantized_payload(ByteReader& in, const Header& h) {
    auto codes = in.raw(h.payload_bytes(), "uint8 payload");
    in.expect_end();
    return QuantizedTensor(h.shape, std::vector<std::uint8_t>(codes.begin(), codes.end()), h.q_min,
                           h.q_max);
}

} // namespace detail

using AnyTensor = std::variant<FeatureTensor, QuantizedTensor>;

inline AnyTensor read_tensor(std::span<const std::uint8_t> bytes) {
    ByteReader in(bytes);
    Header h = read_header(in);
    if (h.dtype == DType::Real32) return detail::read_real_payload<FeatureTag>(in, h);
    return detail::read_quantized_payload(in, h);
}

/// Reads a real32 file into the requested tensor kind; uint8 files are a dtype mismatch.
template <typename Tag = FeatureTag>
RealTensor<Tag> read_real_tensor(std::span<const std::uint8_t> bytes) {
    ByteReader in(bytes);
    Header h = read_header(in);
    if (h.dtype != DType::Real32) throw FormatError("dtype mismatch: expected real32", 4);
    return detail::read_real_payload<Tag>(in, h);
}

inline QuantizedTensor read_quantized_tensor(std::span<const std::uint8_t> bytes) {
    ByteReader in(bytes);
    Header h = read_header(in);
    if (h.dtype != DType::Uint8) throw FormatError("dtype mismatch: expected uint8", 4);
    return detail::read_quantized_payload(in, h);
}

} // namespace ulp::ftb
