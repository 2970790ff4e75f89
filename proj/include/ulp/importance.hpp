#pragma once

#include "ulp/packet.hpp"
#include "ulp/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <variant>
#include <vector>

namespace ulp {

struct ImportanceTag {};

/// Per-element importance, same shape and layout as the feature tensor it scores.
using ImportanceTensor = RealTensor<ImportanceTag>;

/// Per-packet importance scores and the descending-importance order of all data packets.
class PacketRanking {
public:
    PacketRanking() = default;

    /// `scores` is indexed by packet ordinal (channel-major). Ties are broken
    /// by (channel, index) ascending, which is ordinal ascending.
    PacketRanking(Geometry geometry, std::vector<double> scores)
        : geometry_(geometry), scores_(std::move(scores)) {
        if (scores_.size() != geometry_.data_packet_count()) {
            throw ShapeError("ranking has " + std::to_string(scores_.size()) + " scores for " +
                             std::to_string(geometry_.data_packet_count()) + " packets");
        }
        std::vector<std::size_t> ord(scores_.size());
        std::iota(ord.begin(), ord.end(), std::size_t{0});
        std::stable_sort(ord.begin(), ord.end(),
                         [&](std::size_t a, std::size_t b) { return scores_[a] > scores_[b]; });
        order_.reserve(ord.size());
        for (std::size_t n : ord) order_.push_back(geometry_.id_at(n));
    }

    const Geometry& geometry() const noexcept { return geometry_; }
    std::size_t size() const noexcept { return scores_.size(); }
    double score(const PacketId& id) const { return scores_.at(geometry_.ordinal(id)); }
    std::span<const double> scores() const noexcept { return scores_; }

    /// Most important first.
    std::span<const PacketId> order() const noexcept { return order_; }

private:
    Geometry geometry_;
    std::vector<double> scores_;
    std::vector<PacketId> order_;
};

/// Score of each packet is the sum of importance over its r*w coordinates,
/// accumulated in double with Neumaier compensation.
inline PacketRanking packet_importance(const ImportanceTensor& imp, std::uint32_t rows_per_packet) {
    Geometry g{imp.shape(), rows_per_packet};
    if (rows_per_packet == 0 || imp.shape().h % rows_per_packet != 0) {
        throw ShapeError("importance tensor " + to_string(imp.shape()) +
                         " is not divisible into packets of r=" + std::to_string(rows_per_packet));
    }
    auto values = imp.data();
    const std::size_t len = g.payload_bytes();
    std::vector<double> scores(g.data_packet_count());
    for (std::size_t n = 0; n < scores.size(); ++n) {
        const float* v = values.data() + g.offset(g.id_at(n));
        double sum = 0.0;
        double comp = 0.0;
        for (std::size_t t = 0; t < len; ++t) {
            const double x = v[t];
            const double s = sum + x;
            comp += std::abs(sum) >= std::abs(x) ? (sum - s) + x : (x - s) + sum;
            sum = s;
        }
        scores[n] = sum + comp;
    }
    return PacketRanking(g, std::move(scores));
}

/// Checks the importance tensor against the feature geometry it is meant to rank.
inline PacketRanking packet_importance(const ImportanceTensor& imp, const Geometry& g) {
    if (imp.shape() != g.shape) {
        throw ShapeError("importance shape " + to_string(imp.shape()) + " does not match feature shape " +
                         to_string(g.shape));
    }
    return packet_importance(imp, g.rows_per_packet);
}

namespace synth {

struct Uniform {
    float value = 1.0f;
};

/// Only one channel carries importance.
struct SingleChannel {
    std::uint32_t channel = 0;
    float value = 1.0f;
};

/// Isotropic Gaussian over (row, column), replicated in every channel.
struct GaussianBlob {
    double center_row = 0.0;
    double center_col = 0.0;
    double sigma = 8.0;
};

/// Puts each assigned score on the first element of its packet; unassigned packets score 0.
struct PerPacketAssigned {
    std::map<PacketId, float> scores;
};

using Kind = std::variant<Uniform, SingleChannel, GaussianBlob, PerPacketAssigned>;

} // namespace synth

inline ImportanceTensor synth_importance(const synth::Kind& kind, const Geometry& g) {
    validate_geometry(g);
    const Shape s = g.shape;
    std::vector<float> v(s.size(), 0.0f);

    std::visit(
        [&](const auto& k) {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, synth::Uniform>) {
                std::fill(v.begin(), v.end(), k.value);
            } else if constexpr (std::is_same_v<K, synth::SingleChannel>) {
                if (k.channel >= s.c) throw ShapeError("single_channel: channel out of range");
                std::fill_n(v.begin() + static_cast<std::ptrdiff_t>(s.index(0, 0, k.channel)), s.plane(),
                            k.value);
            } else if constexpr (std::is_same_v<K, synth::GaussianBlob>) {
                const double denom = 2.0 * k.sigma * k.sigma;
                for (std::uint32_t x = 0; x < s.h; ++x) {
                    for (std::uint32_t y = 0; y < s.w; ++y) {
                        const double dx = x - k.center_row;
                        const double dy = y - k.center_col;
                        const float val = static_cast<float>(std::exp(-(dx * dx + dy * dy) / denom));
                        for (std::uint32_t j = 0; j < s.c; ++j) v[s.index(x, y, j)] = val;
                    }
                }
            } else {
                for (const auto& [id, score] : k.scores) {
                    if (!g.is_data_id(id)) throw ShapeError("per_packet_assigned: id " + to_string(id));
                    v[g.offset(id)] = score;
                }
            }
        },
        kind);
    return ImportanceTensor(s, std::move(v));
}

} // namespace ulp
