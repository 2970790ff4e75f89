#pragma once

// FEC_A_B transmission planning: the A% least important data packets are
// dropped and replaced one-for-one by parity packets that protect the
// remaining B% = 100 - A%. The transmitted packet count never changes.

#include "ulp/importance.hpp"
#include "ulp/packet.hpp"
#include "ulp/rs.hpp"
#include "ulp/tensor.hpp"

#include <charconv>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace ulp {

/// drop_percent == 0 is unprotected transmission.
struct Scheme {
    std::uint32_t drop_percent = 0;

    bool is_protected() const noexcept { return drop_percent > 0; }

    std::string name() const {
        if (!is_protected()) return "unprotected";
        return "fec_" + std::to_string(drop_percent) + "_" + std::to_string(100 - drop_percent);
    }

    friend bool operator==(const Scheme&, const Scheme&) = default;
};

/// Accepts "unprotected", "fec_A_B" with A + B = 100, or a bare "A".
inline Scheme parse_scheme(std::string_view text) {
    auto parse_int = [&](std::string_view s) {
        std::uint32_t v = 0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || ptr != s.data() + s.size()) {
            throw ConfigError("bad scheme '" + std::string(text) + "'");
        }
        return v;
    };
    Scheme s;
    if (text == "unprotected" || text == "none") return s;
    if (text.starts_with("fec_")) {
        auto rest = text.substr(4);
        auto us = rest.find('_');
        if (us == std::string_view::npos) throw ConfigError("bad scheme '" + std::string(text) + "'");
        s.drop_percent = parse_int(rest.substr(0, us));
        if (s.drop_percent + parse_int(rest.substr(us + 1)) != 100) {
            throw ConfigError("scheme '" + std::string(text) + "': A + B must equal 100");
        }
    } else {
        s.drop_percent = parse_int(text);
    }
    if (s.drop_percent >= 100) throw ConfigError("scheme '" + std::string(text) + "': A must be below 100");
    return s;
}

struct TransmissionPlan {
    Scheme scheme;
    Geometry geometry;
    std::size_t total = 0;               // T, original data packet count
    std::vector<PacketId> dropped;       // ranking order, most important first
    std::vector<rs::CodewordGroup> groups;

    std::size_t parity_count() const noexcept {
        std::size_t m = 0;
        for (const auto& g : groups) m += g.m();
        return m;
    }
    std::size_t transmitted_count() const noexcept { return total - dropped.size() + parity_count(); }

    /// Synthetic id of the j-th parity packet of group g.
    PacketId parity_id(std::size_t group, std::size_t j) const noexcept {
        return {static_cast<std::uint32_t>(geometry.shape.c + group), static_cast<std::uint32_t>(j)};
    }
};

/// Number of dropped packets: round(A * T / 100), half away from zero.
inline std::size_t drop_count(std::uint32_t drop_percent, std::size_t total) noexcept {
    return (2 * static_cast<std::size_t>(drop_percent) * total + 100) / 200;
}

/// Number of codeword groups: enough that no group exceeds 255 symbols.
inline std::size_t group_count(std::size_t total) noexcept {
    return (total + rs::kMaxSymbols - 1) / rs::kMaxSymbols;
}

/// Survivors are dealt round-robin in descending importance to ceil(T/255)
/// groups; parity is spread so that groups with one fewer data packet get the
/// extra parity packet, which keeps every n_g <= ceil(T/G) <= 255.
inline TransmissionPlan plan_fec_ab(const PacketRanking& ranking, Scheme scheme, std::size_t total) {
    if (ranking.size() != total) {
        throw ConfigError("ranking covers " + std::to_string(ranking.size()) + " packets, expected " +
                          std::to_string(total));
    }
    if (scheme.drop_percent >= 100) throw ConfigError("FEC_100_0 leaves nothing to protect");

    TransmissionPlan plan;
    plan.scheme = scheme;
    plan.geometry = ranking.geometry();
    plan.total = total;
    if (!scheme.is_protected() || total == 0) return plan;

    const std::size_t dropped = drop_count(scheme.drop_percent, total);
    const std::size_t kept = total - dropped;
    auto order = ranking.order();
    plan.dropped.assign(order.begin() + static_cast<std::ptrdiff_t>(kept), order.end());
    if (dropped == 0) return plan;

    const std::size_t groups = group_count(total);
    if (kept < groups) {
        throw ConfigError("scheme " + scheme.name() + " keeps " + std::to_string(kept) +
                          " packets, fewer than the " + std::to_string(groups) + " codeword groups");
    }

    std::vector<std::vector<PacketId>> members(groups);
    for (std::size_t s = 0; s < kept; ++s) members[s % groups].push_back(order[s]);

    const std::size_t base = dropped / groups;
    const std::size_t extra = dropped % groups;
    plan.groups.reserve(groups);
    for (std::size_t g = 0; g < groups; ++g) {
        const std::size_t m = base + (g >= groups - extra ? 1 : 0);
        plan.groups.emplace_back(std::move(members[g]), m);
    }
    return plan;
}

inline TransmissionPlan plan_fec_ab(const PacketRanking& ranking, std::uint32_t drop_percent, std::size_t total) {
    return plan_fec_ab(ranking, Scheme{drop_percent}, total);
}

/// Plan for unprotected transmission when no ranking is needed.
inline TransmissionPlan unprotected_plan(const Geometry& g) {
    validate_geometry(g);
    TransmissionPlan plan;
    plan.geometry = g;
    plan.total = g.data_packet_count();
    return plan;
}

/// Survivor data packets (channel-major order) followed by parity packets
/// (group order, then parity ordinal). Exactly T packets.
inline std::vector<Packet> protect(const QuantizedTensor& q, const TransmissionPlan& plan) {
    if (q.shape() != plan.geometry.shape) {
        throw GeometryError("tensor shape " + to_string(q.shape()) + " does not match plan shape " +
                            to_string(plan.geometry.shape));
    }
    std::vector<Packet> data = packetize(q, plan.geometry.rows_per_packet);
    if (!plan.scheme.is_protected()) return data;

    const Geometry& g = plan.geometry;
    std::vector<bool> dropped(g.data_packet_count(), false);
    for (const auto& id : plan.dropped) dropped[g.ordinal(id)] = true;

    for (std::size_t gi = 0; gi < plan.groups.size(); ++gi) {
        const auto& group = plan.groups[gi];
        for (std::size_t s = 0; s < group.data_ids.size(); ++s) {
            Packet& p = data[g.ordinal(group.data_ids[s])];
            p.group = static_cast<std::uint16_t>(gi);
            p.symbol_index = static_cast<std::uint8_t>(s);
        }
    }

    std::vector<Packet> out;
    out.reserve(plan.transmitted_count());
    for (std::size_t n = 0; n < data.size(); ++n) {
        if (!dropped[n]) out.push_back(data[n]);
    }
    for (std::size_t gi = 0; gi < plan.groups.size(); ++gi) {
        const auto& group = plan.groups[gi];
        std::vector<rs::ConstBytes> payloads;
        payloads.reserve(group.k());
        for (const auto& id : group.data_ids) payloads.emplace_back(data[g.ordinal(id)].payload);
        auto parity = rs::encode(group, payloads);
        for (std::size_t j = 0; j < parity.size(); ++j) {
            Packet p;
            p.id = plan.parity_id(gi, j);
            p.kind = PacketKind::Parity;
            p.group = static_cast<std::uint16_t>(gi);
            p.symbol_index = static_cast<std::uint8_t>(group.k() + j);
            p.payload = std::move(parity[j]);
            out.push_back(std::move(p));
        }
    }
    return out;
}

/// Deterministic text record of a plan, for experiment logs.
inline std::string plan_summary(const TransmissionPlan& plan) {
    std::ostringstream os;
    os << "scheme " << plan.scheme.name() << "\n";
    os << "geometry " << to_string(plan.geometry.shape) << " r " << plan.geometry.rows_per_packet << "\n";
    os << "field 0x11D construction systematic-vandermonde\n";
    os << "total " << plan.total << "\n";
    os << "dropped " << plan.dropped.size() << "\n";
    os << "parity " << plan.parity_count() << "\n";
    os << "groups " << plan.groups.size() << "\n";
    for (std::size_t g = 0; g < plan.groups.size(); ++g) {
        os << "group " << g << " k " << plan.groups[g].k() << " m " << plan.groups[g].m() << "\n";
    }
    os << "dropped_ids";
    for (const auto& id : plan.dropped) os << ' ' << to_string(id);
    os << "\n";
    return os.str();
}

} // namespace ulp
