#pragma once

// Packet-loss channel models: iid Bernoulli erasures and deterministic
// importance-ordered erasures.

#include "ulp/importance.hpp"
#include "ulp/packet.hpp"

#include <cmath>
#include <cstdint>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace ulp::channel {

/// Counter-based generator: the draw for packet k depends only on (seed, k).
inline constexpr const char* kGeneratorName = "splitmix64-counter";

inline constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Uniform double in [0, 1) for counter k under `seed`.
inline constexpr double uniform(std::uint64_t seed, std::uint64_t k) noexcept {
    const std::uint64_t z = splitmix64(splitmix64(seed) ^ (k * 0xD1B54A32D192ED03ull));
    return static_cast<double>(z >> 11) * 0x1.0p-53;
}

/// Child seed for independent streams (trial t of experiment point p, ...).
inline constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    return splitmix64(seed ^ splitmix64(stream + 0x632BE59BD9B4E019ull));
}

struct Iid {
    double loss_probability = 0.0;
    std::uint64_t seed = 0;
};

/// Erase the round(f * T) highest-ranked data packets.
struct DropMostImportant {
    double fraction = 0.0;
};

/// Erase the round(f * T) lowest-ranked data packets.
struct DropLeastImportant {
    double fraction = 0.0;
};

using Config = std::variant<Iid, DropMostImportant, DropLeastImportant>;

inline std::string mode_name(const Config& cfg) {
    switch (cfg.index()) {
        case 0: return "iid";
        case 1: return "drop_most";
        default: return "drop_least";
    }
}

inline void validate(const Config& cfg) {
    std::visit(
        [](const auto& c) {
            using C = std::decay_t<decltype(c)>;
            double v = 0.0;
            if constexpr (std::is_same_v<C, Iid>) v = c.loss_probability;
            else v = c.fraction;
            if (!(v >= 0.0 && v <= 1.0)) {
                throw ConfigError("channel parameter " + std::to_string(v) + " outside [0, 1]");
            }
        },
        cfg);
}

/// Ids erased by an ordered mode: a prefix (most) or suffix (least) of the ranking.
inline std::set<PacketId> ordered_erasures(const Config& cfg, const PacketRanking& ranking) {
    auto order = ranking.order();
    std::set<PacketId> out;
    if (const auto* most = std::get_if<DropMostImportant>(&cfg)) {
        const auto n = static_cast<std::size_t>(std::round(most->fraction * static_cast<double>(order.size())));
        out.insert(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n));
    } else if (const auto* least = std::get_if<DropLeastImportant>(&cfg)) {
        const auto n = static_cast<std::size_t>(std::round(least->fraction * static_cast<double>(order.size())));
        out.insert(order.end() - static_cast<std::ptrdiff_t>(n), order.end());
    }
    return out;
}

/// survived[k] for the k-th packet of the stream.
inline std::vector<bool> survival_mask(std::span<const Packet> stream, const Config& cfg,
                                       const PacketRanking* ranking = nullptr) {
    validate(cfg);
    std::vector<bool> survived(stream.size(), true);
    if (const auto* iid = std::get_if<Iid>(&cfg)) {
        for (std::size_t k = 0; k < stream.size(); ++k) {
            survived[k] = !(uniform(iid->seed, k) < iid->loss_probability);
        }
        return survived;
    }
    if (ranking == nullptr) throw ConfigError("ordered loss mode '" + mode_name(cfg) + "' needs a ranking");
    const auto erased = ordered_erasures(cfg, *ranking);
    for (std::size_t k = 0; k < stream.size(); ++k) {
        const Packet& p = stream[k];
        if (p.kind == PacketKind::Data && erased.contains(p.id)) survived[k] = false;
    }
    return survived;
}

struct LossRecord {
    PacketId id;
    PacketKind kind = PacketKind::Data;
    bool survived = true;
};

struct Outcome {
    std::vector<Packet> survivors;
    std::vector<LossRecord> log;

    std::size_t lost() const noexcept { return log.size() - survivors.size(); }
    double loss_rate() const noexcept {
        return log.empty() ? 0.0 : static_cast<double>(lost()) / static_cast<double>(log.size());
    }
};

inline Outcome transmit(std::span<const Packet> stream, const Config& cfg, const PacketRanking* ranking = nullptr) {
    const auto mask = survival_mask(stream, cfg, ranking);
    Outcome out;
    out.log.reserve(stream.size());
    for (std::size_t k = 0; k < stream.size(); ++k) {
        out.log.push_back({stream[k].id, stream[k].kind, mask[k]});
        if (mask[k]) out.survivors.push_back(stream[k]);
    }
    return out;
}

/// CSV loss log: one line per transmitted packet.
inline std::string loss_log_csv(std::span<const LossRecord> log) {
    std::ostringstream os;
    os << "channel,index,kind,survived\n";
    for (const auto& r : log) {
        os << r.id.channel << ',' << r.id.index << ',' << to_string(r.kind) << ',' << (r.survived ? 1 : 0) << '\n';
    }
    return os.str();
}

} // namespace ulp::channel
