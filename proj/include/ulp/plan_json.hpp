#pragma once

// JSON sidecar carrying everything the receiver needs out-of-band: geometry,
// quantization range and the codeword group table.

#include "ulp/plan.hpp"
#include "ulp/receiver.hpp"

#include <nlohmann/json.hpp>

namespace ulp {

struct Session {
    TransmissionPlan plan;
    float q_min = 0.0f;
    float q_max = 0.0f;
};

namespace detail {

inline nlohmann::json id_json(const PacketId& id) { return nlohmann::json::array({id.channel, id.index}); }

inline PacketId id_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 2) throw ConfigError("packet id must be [channel, index]");
    return {j.at(0).get<std::uint32_t>(), j.at(1).get<std::uint32_t>()};
}

} // namespace detail

inline nlohmann::json to_json(const Session& s) {
    const auto& p = s.plan;
    nlohmann::json groups = nlohmann::json::array();
    for (const auto& g : p.groups) {
        nlohmann::json ids = nlohmann::json::array();
        for (const auto& id : g.data_ids) ids.push_back(detail::id_json(id));
        groups.push_back({{"k", g.k()}, {"m", g.m()}, {"data_ids", std::move(ids)}});
    }
    nlohmann::json dropped = nlohmann::json::array();
    for (const auto& id : p.dropped) dropped.push_back(detail::id_json(id));
    return {
        {"format", "ulp-plan"},
        {"version", 1},
        {"scheme", p.scheme.name()},
        {"geometry",
         {{"h", p.geometry.shape.h},
          {"w", p.geometry.shape.w},
          {"c", p.geometry.shape.c},
          {"r", p.geometry.rows_per_packet}}},
        {"quantization", {{"q_min", s.q_min}, {"q_max", s.q_max}}},
        {"field_polynomial", "0x11D"},
        {"construction", "systematic-vandermonde"},
        {"total", p.total},
        {"dropped", std::move(dropped)},
        {"groups", std::move(groups)},
    };
}

inline Session session_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format") != "ulp-plan" || j.at("version") != 1) throw ConfigError("not a ulp-plan v1 document");
        Session s;
        auto& p = s.plan;
        p.scheme = parse_scheme(j.at("scheme").get<std::string>());
        const auto& geo = j.at("geometry");
        p.geometry.shape = {geo.at("h").get<std::uint32_t>(), geo.at("w").get<std::uint32_t>(),
                            geo.at("c").get<std::uint32_t>()};
        p.geometry.rows_per_packet = geo.at("r").get<std::uint32_t>();
        validate_geometry(p.geometry);
        s.q_min = j.at("quantization").at("q_min").get<float>();
        s.q_max = j.at("quantization").at("q_max").get<float>();
        p.total = j.at("total").get<std::size_t>();
        for (const auto& id : j.at("dropped")) p.dropped.push_back(detail::id_from_json(id));
        for (const auto& g : j.at("groups")) {
            std::vector<PacketId> ids;
            for (const auto& id : g.at("data_ids")) ids.push_back(detail::id_from_json(id));
            if (ids.size() != g.at("k").get<std::size_t>()) throw ConfigError("group k disagrees with data_ids");
            p.groups.emplace_back(std::move(ids), g.at("m").get<std::size_t>());
        }
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed plan: ") + e.what());
    }
}

inline nlohmann::json to_json(const RecoveryReport& r) {
    nlohmann::json groups = nlohmann::json::array();
    for (const auto& g : r.groups) {
        groups.push_back({{"status", to_string(g.status)},
                          {"k", g.k},
                          {"m", g.m},
                          {"received_data", g.received_data},
                          {"received_parity", g.received_parity},
                          {"recovered", g.recovered},
                          {"zero_filled", g.zero_filled}});
    }
    nlohmann::json out = {
        {"total", r.total},
        {"received", r.received},
        {"recovered", r.recovered},
        {"zero_filled", r.zero_filled},
        {"dropped", r.dropped},
        {"parity_received", r.parity_received},
        {"recovery_rate", r.recovery_rate()},
        {"groups", std::move(groups)},
    };
    out["tensor_mse"] = r.tensor_mse ? nlohmann::json(*r.tensor_mse) : nlohmann::json(nullptr);
    return out;
}

} // namespace ulp
