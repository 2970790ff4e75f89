#pragma once

#include "ulp/plan.hpp"
#include "ulp/rs.hpp"
#include "ulp/tensor.hpp"

#include <algorithm>
#include <cstring>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ulp {

struct GroupOutcome {
    enum class Status { Intact, Recovered, Salvaged };

    Status status = Status::Intact;
    std::size_t k = 0;
    std::size_t m = 0;
    std::size_t received_data = 0;
    std::size_t received_parity = 0;
    std::size_t recovered = 0;    // data packets rebuilt from parity
    std::size_t zero_filled = 0;  // data packets lost beyond capability
};

inline const char* to_string(GroupOutcome::Status s) {
    switch (s) {
        case GroupOutcome::Status::Intact: return "intact";
        case GroupOutcome::Status::Recovered: return "recovered";
        default: return "salvaged";
    }
}

/// received + recovered + zero_filled == total on every run.
struct RecoveryReport {
    std::size_t total = 0;
    std::size_t received = 0;
    std::size_t recovered = 0;
    std::size_t zero_filled = 0;  // includes deliberately dropped packets
    std::size_t dropped = 0;
    std::size_t parity_received = 0;
    std::vector<GroupOutcome> groups;
    std::vector<PacketId> zero_filled_ids;  // ascending
    std::optional<double> tensor_mse;

    /// Delivered-or-recovered share of the data packets that were actually sent.
    double recovery_rate() const noexcept {
        const std::size_t sent = total - dropped;
        return sent == 0 ? 1.0 : static_cast<double>(received + recovered) / static_cast<double>(sent);
    }
};

struct Reception {
    FeatureTensor tensor;
    RecoveryReport report;
};

namespace detail {

inline void check_payload(const Packet& p, std::size_t len) {
    if (p.payload.size() != len) {
        throw IntegrityError("packet " + to_string(p.id) + " has " + std::to_string(p.payload.size()) +
                             " payload bytes, expected " + std::to_string(len));
    }
}

/// Keeps the first copy of each slot; identical duplicates are harmless.
inline void place(const Packet*& slot, const Packet& p) {
    if (slot == nullptr) {
        slot = &p;
    } else if (slot->payload != p.payload) {
        throw IntegrityError("duplicate packet " + to_string(p.id) + " with conflicting payload");
    }
}

} // namespace detail

/// Rebuilds the feature tensor from surviving packets. Each codeword group is
/// erasure-decoded; when a group lost more than m_g packets its received data
/// packets are kept verbatim. Dropped and unrecoverable regions are set to
/// feature value 0 after dequantization.
inline Reception receive(std::span<const Packet> survivors, const TransmissionPlan& plan, float q_min, float q_max,
                         const FeatureTensor* reference = nullptr) {
    const Geometry& g = plan.geometry;
    validate_geometry(g);
    if (plan.total != g.data_packet_count()) throw IntegrityError("plan total does not match geometry");
    const std::size_t len = g.payload_bytes();
    const std::size_t total = g.data_packet_count();

    // Where each data packet is expected: group index and symbol, or none.
    constexpr std::size_t kUngrouped = static_cast<std::size_t>(-1);
    std::vector<std::size_t> group_of(total, kUngrouped);
    std::vector<std::size_t> symbol_of(total, 0);
    std::vector<bool> is_dropped(total, false);
    for (const auto& id : plan.dropped) {
        if (!g.is_data_id(id)) throw IntegrityError("plan drops unknown packet " + to_string(id));
        is_dropped[g.ordinal(id)] = true;
    }
    for (std::size_t gi = 0; gi < plan.groups.size(); ++gi) {
        const auto& ids = plan.groups[gi].data_ids;
        for (std::size_t s = 0; s < ids.size(); ++s) {
            if (!g.is_data_id(ids[s])) throw IntegrityError("plan groups unknown packet " + to_string(ids[s]));
            const std::size_t n = g.ordinal(ids[s]);
            if (group_of[n] != kUngrouped || is_dropped[n]) {
                throw IntegrityError("packet " + to_string(ids[s]) + " assigned twice in plan");
            }
            group_of[n] = gi;
            symbol_of[n] = s;
        }
    }
    const bool grouped = !plan.groups.empty();

    std::vector<const Packet*> data(total, nullptr);
    std::vector<std::vector<const Packet*>> parity(plan.groups.size());
    for (std::size_t gi = 0; gi < plan.groups.size(); ++gi) parity[gi].assign(plan.groups[gi].m(), nullptr);

    for (const Packet& p : survivors) {
        detail::check_payload(p, len);
        if (p.kind == PacketKind::Data) {
            if (!g.is_data_id(p.id)) throw IntegrityError("data packet " + to_string(p.id) + " outside geometry");
            const std::size_t n = g.ordinal(p.id);
            if (is_dropped[n]) throw IntegrityError("received deliberately dropped packet " + to_string(p.id));
            if (grouped) {
                if (!p.group || !p.symbol_index || *p.group != group_of[n] || *p.symbol_index != symbol_of[n]) {
                    throw IntegrityError("packet " + to_string(p.id) + " group metadata disagrees with plan");
                }
            }
            detail::place(data[n], p);
        } else {
            if (!p.group || *p.group >= plan.groups.size() || !p.symbol_index) {
                throw IntegrityError("parity packet " + to_string(p.id) + " has no valid group");
            }
            const auto& grp = plan.groups[*p.group];
            if (*p.symbol_index < grp.k() || *p.symbol_index >= grp.n() ||
                p.id != plan.parity_id(*p.group, *p.symbol_index - grp.k())) {
                throw IntegrityError("parity packet " + to_string(p.id) + " symbol metadata disagrees with plan");
            }
            detail::place(parity[*p.group][*p.symbol_index - grp.k()], p);
        }
    }

    RecoveryReport report;
    report.total = total;
    report.dropped = plan.dropped.size();

    std::vector<std::uint8_t> codes(g.shape.size(), quantize_value(0.0f, q_min, q_max));
    std::vector<bool> filled(total, false);
    auto write = [&](const PacketId& id, rs::ConstBytes payload) {
        std::memcpy(codes.data() + g.offset(id), payload.data(), len);
        filled[g.ordinal(id)] = true;
    };

    for (std::size_t gi = 0; gi < plan.groups.size(); ++gi) {
        const auto& grp = plan.groups[gi];
        GroupOutcome outcome;
        outcome.k = grp.k();
        outcome.m = grp.m();
        std::map<std::size_t, rs::ConstBytes> symbols;
        for (std::size_t s = 0; s < grp.k(); ++s) {
            if (const Packet* p = data[g.ordinal(grp.data_ids[s])]) {
                symbols.emplace(s, p->payload);
                ++outcome.received_data;
            }
        }
        for (std::size_t j = 0; j < grp.m(); ++j) {
            if (const Packet* p = parity[gi][j]) {
                symbols.emplace(grp.k() + j, p->payload);
                ++outcome.received_parity;
            }
        }
        for (const auto& [s, payload] : symbols) {
            if (s < grp.k()) write(grp.data_ids[s], payload);
        }
        if (outcome.received_data < grp.k()) {
            auto result = rs::decode(grp, symbols);
            if (auto* rec = std::get_if<rs::Recovered>(&result)) {
                for (std::size_t s = 0; s < grp.k(); ++s) {
                    if (!symbols.contains(s)) write(grp.data_ids[s], rec->data[s]);
                }
                outcome.status = GroupOutcome::Status::Recovered;
                outcome.recovered = rec->rebuilt;
            } else {
                outcome.status = GroupOutcome::Status::Salvaged;
                outcome.zero_filled = grp.k() - outcome.received_data;
            }
        }
        report.received += outcome.received_data;
        report.recovered += outcome.recovered;
        report.parity_received += outcome.received_parity;
        report.groups.push_back(outcome);
    }

    for (std::size_t n = 0; n < total; ++n) {
        if (group_of[n] == kUngrouped && !is_dropped[n] && data[n] != nullptr) {
            write(g.id_at(n), data[n]->payload);
            ++report.received;
        }
    }

    FeatureTensor features = dequantize(QuantizedTensor(g.shape, std::move(codes), q_min, q_max));
    std::vector<float> values(features.data().begin(), features.data().end());
    for (std::size_t n = 0; n < total; ++n) {
        if (filled[n]) continue;
        const PacketId id = g.id_at(n);
        report.zero_filled_ids.push_back(id);
        std::fill_n(values.begin() + static_cast<std::ptrdiff_t>(g.offset(id)), len, 0.0f);
    }
    report.zero_filled = report.zero_filled_ids.size();

    Reception out{FeatureTensor(g.shape, std::move(values)), std::move(report)};
    if (reference != nullptr) out.report.tensor_mse = mse(out.tensor, *reference);
    return out;
}

} // namespace ulp
