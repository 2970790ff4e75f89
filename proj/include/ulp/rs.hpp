#pragma once

// Systematic Reed-Solomon erasure code over GF(256), applied bytewise across
// equal-length packet payloads. Symbol t of a codeword is byte t of every
// packet in the group.
//
// Construction: an n x k Vandermonde matrix on the distinct points
// {0, 1, a, a^2, ..., a^(n-2)} is multiplied on the right by the inverse of
// its top k x k block. The top block of the product is the identity, and any k
// rows remain linearly independent, so any k received symbols determine the data.

#include "ulp/bytes.hpp"
#include "ulp/error.hpp"
#include "ulp/gf256.hpp"
#include "ulp/packet.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace ulp::rs {

inline constexpr std::size_t kMaxSymbols = 255;

/// Dense row-major matrix over GF(256).
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), a_(rows * cols, 0) {}

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1;
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::uint8_t& operator()(std::size_t r, std::size_t c) { return a_[r * cols_ + c]; }
    std::uint8_t operator()(std::size_t r, std::size_t c) const { return a_[r * cols_ + c]; }
    std::span<const std::uint8_t> row(std::size_t r) const { return {a_.data() + r * cols_, cols_}; }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::uint8_t> a_;
};

inline Matrix multiply(const Matrix& x, const Matrix& y) {
    if (x.cols() != y.rows()) throw CodecError("matrix dimension mismatch");
    Matrix out(x.rows(), y.cols());
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t l = 0; l < x.cols(); ++l) {
            const std::uint8_t a = x(i, l);
            if (a == 0) continue;
            for (std::size_t j = 0; j < y.cols(); ++j) out(i, j) ^= gf::mul(a, y(l, j));
        }
    return out;
}

/// Gauss-Jordan inversion; std::nullopt when singular.
inline std::optional<Matrix> invert(Matrix m) {
    const std::size_t n = m.rows();
    if (m.cols() != n) throw CodecError("cannot invert a non-square matrix");
    Matrix inv = Matrix::identity(n);
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        while (pivot < n && m(pivot, col) == 0) ++pivot;
        if (pivot == n) return std::nullopt;
        if (pivot != col) {
            for (std::size_t j = 0; j < n; ++j) {
                std::swap(m(pivot, j), m(col, j));
                std::swap(inv(pivot, j), inv(col, j));
            }
        }
        const std::uint8_t scale = gf::inv(m(col, col));
        for (std::size_t j = 0; j < n; ++j) {
            m(col, j) = gf::mul(m(col, j), scale);
            inv(col, j) = gf::mul(inv(col, j), scale);
        }
        for (std::size_t r = 0; r < n; ++r) {
            const std::uint8_t f = m(r, col);
            if (r == col || f == 0) continue;
            for (std::size_t j = 0; j < n; ++j) {
                m(r, j) ^= gf::mul(f, m(col, j));
                inv(r, j) ^= gf::mul(f, inv(col, j));
            }
        }
    }
    return inv;
}

/// n x k Vandermonde matrix, row i evaluated at point 0 (i = 0) or alpha^(i-1).
inline Matrix vandermonde(std::size_t n, std::size_t k) {
    Matrix v(n, k);
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint8_t point = i == 0 ? 0 : gf::exp(static_cast<unsigned>(i - 1));
        for (std::size_t j = 0; j < k; ++j) v(i, j) = gf::pow(point, static_cast<unsigned>(j));
    }
    return v;
}

/// Full n x k systematic generator: identity on top, parity rows below.
inline Matrix systematic_generator(std::size_t k, std::size_t m) {
    const std::size_t n = k + m;
    if (k == 0) throw CodecError("code needs at least one data symbol");
    if (n > kMaxSymbols) throw CodecError("n = " + std::to_string(n) + " exceeds 255");
    Matrix v = vandermonde(n, k);
    Matrix top(k, k);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) top(i, j) = v(i, j);
    auto top_inv = invert(top);
    if (!top_inv) throw CodecError("internal: singular Vandermonde block");
    return multiply(v, *top_inv);
}

/// (n, k) erasure code. `parity(j, i)` is the coefficient of data symbol i in
/// parity symbol j.
class ErasureCode {
public:
    ErasureCode(std::size_t k, std::size_t m) : k_(k), m_(m) {
        Matrix g = systematic_generator(k, m);
        parity_ = Matrix(m, k);
        for (std::size_t j = 0; j < m; ++j)
            for (std::size_t i = 0; i < k; ++i) parity_(j, i) = g(k + j, i);
    }

    std::size_t k() const noexcept { return k_; }
    std::size_t m() const noexcept { return m_; }
    std::size_t n() const noexcept { return k_ + m_; }
    const Matrix& parity() const noexcept { return parity_; }

    /// Row r of the full n x k systematic generator.
    std::vector<std::uint8_t> generator_row(std::size_t r) const {
        std::vector<std::uint8_t> row(k_, 0);
        if (r < k_) {
            row[r] = 1;
        } else {
            auto p = parity_.row(r - k_);
            row.assign(p.begin(), p.end());
        }
        return row;
    }

private:
    std::size_t k_;
    std::size_t m_;
    Matrix parity_;
};

/// Codes are immutable; share one instance per (k, m).
inline std::shared_ptr<const ErasureCode> code_for(std::size_t k, std::size_t m) {
    static std::mutex mu;
    static std::map<std::pair<std::size_t, std::size_t>, std::shared_ptr<const ErasureCode>> cache;
    std::lock_guard lock(mu);
    auto& slot = cache[{k, m}];
    if (!slot) slot = std::make_shared<const ErasureCode>(k, m);
    return slot;
}

/// A codeword group: k data packets (listed in symbol order) protected by m parity packets.
struct CodewordGroup {
    std::vector<PacketId> data_ids;
    std::shared_ptr<const ErasureCode> code;

    CodewordGroup() = default;
    CodewordGroup(std::vector<PacketId> ids, std::size_t m)
        : data_ids(std::move(ids)), code(code_for(data_ids.size(), m)) {}

    std::size_t k() const noexcept { return code->k(); }
    std::size_t m() const noexcept { return code->m(); }
    std::size_t n() const noexcept { return code->n(); }
};

using ConstBytes = std::span<const std::uint8_t>;

/// Parity payloads for k equal-length data payloads.
inline std::vector<Bytes> encode(const ErasureCode& code, std::span<const ConstBytes> data) {
    if (data.size() != code.k()) {
        throw CodecError("encode: expected " + std::to_string(code.k()) + " payloads, got " +
                         std::to_string(data.size()));
    }
    const std::size_t len = data.front().size();
    for (const auto& d : data) {
        if (d.size() != len) throw CodecError("encode: payload lengths differ");
    }
    std::vector<Bytes> parity(code.m(), Bytes(len, 0));
    for (std::size_t j = 0; j < code.m(); ++j) {
        auto coeffs = code.parity().row(j);
        for (std::size_t i = 0; i < code.k(); ++i) gf::mul_add(parity[j], data[i], coeffs[i]);
    }
    return parity;
}

inline std::vector<Bytes> encode(const CodewordGroup& group, std::span<const ConstBytes> data) {
    return encode(*group.code, data);
}

struct Recovered {
    std::vector<Bytes> data;  // all k data payloads, symbol order
    std::size_t rebuilt = 0;  // how many of them came from parity
};

/// Fewer than k symbols arrived; the systematic data that did arrive is kept.
struct Unrecoverable {
    std::map<std::size_t, Bytes> salvaged;  // data symbol index -> payload
};

using DecodeResult = std::variant<Recovered, Unrecoverable>;

/// Erasure decoding from any received subset (symbol index -> payload).
///
/// Only the missing data symbols are solved for: subtracting the known data's
/// contribution from e received parity symbols leaves an e x e system in the
/// erased symbols. That system is a square block of the parity rows, which is
/// nonsingular for an MDS code.
inline DecodeResult decode(const ErasureCode& code, const std::map<std::size_t, ConstBytes>& received) {
    const std::size_t k = code.k();
    std::size_t len = 0;
    bool have_len = false;
    for (const auto& [idx, payload] : received) {
        if (idx >= code.n()) {
            throw CodecError("decode: symbol index " + std::to_string(idx) + " outside codeword of " +
                             std::to_string(code.n()));
        }
        if (!have_len) {
            len = payload.size();
            have_len = true;
        } else if (payload.size() != len) {
            throw CodecError("decode: payload lengths differ");
        }
    }

    std::vector<std::size_t> erased;
    std::vector<bool> is_erased(k, false);
    for (std::size_t i = 0; i < k; ++i) {
        if (!received.contains(i)) {
            erased.push_back(i);
            is_erased[i] = true;
        }
    }

    if (received.size() < k) {
        Unrecoverable u;
        for (const auto& [idx, payload] : received) {
            if (idx < k) u.salvaged.emplace(idx, Bytes(payload.begin(), payload.end()));
        }
        return u;
    }

    Recovered out;
    out.data.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
        if (auto it = received.find(i); it != received.end()) out.data[i].assign(it->second.begin(), it->second.end());
    }
    if (erased.empty()) return out;

    const std::size_t e = erased.size();
    std::vector<std::size_t> parity_rows;
    for (auto it = received.lower_bound(k); it != received.end() && parity_rows.size() < e; ++it) {
        parity_rows.push_back(it->first - k);
    }

    Matrix sub(e, e);
    for (std::size_t r = 0; r < e; ++r)
        for (std::size_t c = 0; c < e; ++c) sub(r, c) = code.parity()(parity_rows[r], erased[c]);
    auto sub_inv = invert(sub);
    if (!sub_inv) throw CodecError("internal: singular decoding submatrix (MDS property violated)");

    // Syndromes: received parity minus the contribution of the known data.
    std::vector<Bytes> syndrome(e);
    for (std::size_t r = 0; r < e; ++r) {
        auto p = received.at(k + parity_rows[r]);
        syndrome[r].assign(p.begin(), p.end());
        auto coeffs = code.parity().row(parity_rows[r]);
        for (std::size_t i = 0; i < k; ++i) {
            if (!is_erased[i]) gf::mul_add(syndrome[r], out.data[i], coeffs[i]);
        }
    }
    for (std::size_t c = 0; c < e; ++c) {
        Bytes& dst = out.data[erased[c]];
        dst.assign(len, 0);
        for (std::size_t r = 0; r < e; ++r) gf::mul_add(dst, syndrome[r], (*sub_inv)(c, r));
    }
    out.rebuilt = e;
    return out;
}

inline DecodeResult decode(const CodewordGroup& group, const std::map<std::size_t, ConstBytes>& received) {
    return decode(*group.code, received);
}

} // namespace ulp::rs
