#pragma once

#include "ulp/error.hpp"

#include <bit>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

namespace ulp {

using Bytes = std::vector<std::uint8_t>;

/// Little-endian appender.
class ByteWriter {
public:
    void u8(std::uint8_t v) { out_.push_back(v); }

    void u16(std::uint16_t v) {
        for (int s = 0; s < 16; s += 8) out_.push_back(static_cast<std::uint8_t>(v >> s));
    }

    void u32(std::uint32_t v) {
        for (int s = 0; s < 32; s += 8) out_.push_back(static_cast<std::uint8_t>(v >> s));
    }

    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

    void raw(std::span<const std::uint8_t> bytes) { out_.insert(out_.end(), bytes.begin(), bytes.end()); }

    void reserve(std::size_t n) { out_.reserve(n); }
    Bytes take() && { return std::move(out_); }

private:
    Bytes out_;
};

/// Little-endian cursor; every short read throws FormatError at the current offset.
class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}

    std::size_t offset() const noexcept { return pos_; }
    std::size_t remaining() const noexcept { return in_.size() - pos_; }

    void require(std::size_t n, const char* what) const {
        if (remaining() < n) {
            throw FormatError(std::string("truncated ") + what + ": need " + std::to_string(n) +
                                  " bytes, have " + std::to_string(remaining()),
                              pos_);
        }
    }

    std::uint8_t u8(const char* what = "u8") {
        require(1, what);
        return in_[pos_++];
    }

    std::uint16_t u16(const char* what = "u16") {
        require(2, what);
        std::uint16_t v = static_cast<std::uint16_t>(in_[pos_] | (in_[pos_ + 1] << 8));
        pos_ += 2;
        return v;
    }

    std::uint32_t u32(const char* what = "u32") {
        require(4, what);
        std::uint32_t v = 0;
        for (int k = 3; k >= 0; --k) v = (v << 8) | in_[pos_ + k];
        pos_ += 4;
        return v;
    }

    float f32(const char* what = "f32") { return std::bit_cast<float>(u32(what)); }

    std::span<const std::uint8_t> raw(std::size_t n, const char* what) {
        require(n, what);
        auto s = in_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

    void expect_end() const {
        if (remaining() != 0) {
            throw FormatError(std::to_string(remaining()) + " trailing bytes", pos_);
        }
    }

private:
    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

inline Bytes read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open '" + path + "' for reading");
    return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file(const std::string& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot open '" + path + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ConfigError("short write to '" + path + "'");
}

} // namespace ulp
