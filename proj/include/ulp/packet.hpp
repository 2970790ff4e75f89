#pragma once

#include "ulp/bytes.hpp"
#include "ulp/tensor.hpp"

#include <array>
#include <compare>
#include <cstring>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace ulp {

/// The i-th packet of tensor channel j. Parity packets use a synthetic id
/// with channel = c + group and index = parity ordinal within the group.
struct PacketId {
    std::uint32_t channel = 0;
    std::uint32_t index = 0;

    friend constexpr auto operator<=>(const PacketId&, const PacketId&) = default;
};

inline std::string to_string(const PacketId& id) {
    return std::to_string(id.channel) + ":" + std::to_string(id.index);
}

enum class PacketKind : std::uint8_t { Data = 0, Parity = 1 };

inline const char* to_string(PacketKind k) { return k == PacketKind::Data ? "data" : "parity"; }

struct Packet {
    PacketId id;
    PacketKind kind = PacketKind::Data;
    std::optional<std::uint16_t> group;
    std::optional<std::uint8_t> symbol_index;
    Bytes payload;

    friend bool operator==(const Packet&, const Packet&) = default;
};

/// Tensor shape plus rows-per-packet.
struct Geometry {
    Shape shape;
    std::uint32_t rows_per_packet = 1;

    std::uint32_t packets_per_channel() const noexcept { return shape.h / rows_per_packet; }
    std::size_t data_packet_count() const noexcept {
        return static_cast<std::size_t>(shape.c) * packets_per_channel();
    }
    std::size_t payload_bytes() const noexcept {
        return static_cast<std::size_t>(rows_per_packet) * shape.w;
    }
    /// Position of a data packet in channel-major packetize order.
    std::size_t ordinal(const PacketId& id) const noexcept {
        return static_cast<std::size_t>(id.channel) * packets_per_channel() + id.index;
    }
    PacketId id_at(std::size_t ordinal) const noexcept {
        return {static_cast<std::uint32_t>(ordinal / packets_per_channel()),
                static_cast<std::uint32_t>(ordinal % packets_per_channel())};
    }
    bool is_data_id(const PacketId& id) const noexcept {
        return id.channel < shape.c && id.index < packets_per_channel();
    }
    /// Flat offset of the first payload byte of a data packet.
    std::size_t offset(const PacketId& id) const noexcept {
        return shape.index(static_cast<std::size_t>(id.index) * rows_per_packet, 0, id.channel);
    }

    friend bool operator==(const Geometry&, const Geometry&) = default;
};

inline void validate_geometry(const Geometry& g) {
    validate_shape(g.shape);
    if (g.rows_per_packet == 0 || g.shape.h % g.rows_per_packet != 0) {
        throw GeometryError("rows per packet r=" + std::to_string(g.rows_per_packet) +
                            " must divide h=" + std::to_string(g.shape.h));
    }
}

/// Splits channel j into h/r packets of r consecutive rows; channel-major order.
inline std::vector<Packet> packetize(const QuantizedTensor& q, std::uint32_t rows_per_packet) {
    Geometry g{q.shape(), rows_per_packet};
    validate_geometry(g);
    const std::size_t len = g.payload_bytes();
    auto codes = q.codes();
    std::vector<Packet> out;
    out.reserve(g.data_packet_count());
    for (std::size_t n = 0; n < g.data_packet_count(); ++n) {
        Packet p;
        p.id = g.id_at(n);
        auto first = codes.begin() + static_cast<std::ptrdiff_t>(g.offset(p.id));
        p.payload.assign(first, first + static_cast<std::ptrdiff_t>(len));
        out.push_back(std::move(p));
    }
    return out;
}

/// Reassembles the data packets whose ids are in `received`; everything else is
/// filled with the code nearest to feature value 0. Parity packets are ignored.
inline QuantizedTensor depacketize(std::span<const Packet> packets, const Geometry& g, float q_min,
                                   float q_max, const std::set<PacketId>& received) {
    validate_geometry(g);
    const std::size_t len = g.payload_bytes();
    std::vector<std::uint8_t> codes(g.shape.size(), quantize_value(0.0f, q_min, q_max));
    std::vector<const Packet*> placed(g.data_packet_count(), nullptr);

    for (const Packet& p : packets) {
        if (p.kind != PacketKind::Data) continue;
        if (!g.is_data_id(p.id)) {
            throw IntegrityError("data packet id " + to_string(p.id) + " outside geometry");
        }
        if (p.payload.size() != len) {
            throw IntegrityError("packet " + to_string(p.id) + " payload is " +
                                 std::to_string(p.payload.size()) + " bytes, expected " +
                                 std::to_string(len));
        }
        const Packet*& slot = placed[g.ordinal(p.id)];
        if (slot != nullptr) {
            if (slot->payload != p.payload) {
                throw IntegrityError("duplicate packet " + to_string(p.id) + " with conflicting payload");
            }
            continue;
        }
        slot = &p;
        if (received.contains(p.id)) {
            std::memcpy(codes.data() + g.offset(p.id), p.payload.data(), len);
        }
    }
    return QuantizedTensor(g.shape, std::move(codes), q_min, q_max);
}

/// Reassembles using every data packet present in the list.
inline QuantizedTensor depacketize(std::span<const Packet> packets, const Geometry& g, float q_min,
                                   float q_max) {
    std::set<PacketId> all;
    for (const Packet& p : packets) {
        if (p.kind == PacketKind::Data) all.insert(p.id);
    }
    return depacketize(packets, g, q_min, q_max, all);
}

// Wire image: j:u32 | i:u32 | kind:u8 | group:u16 | symbol_index:u8 | payload.
// Absent group / symbol_index are encoded as 0xFFFF / 0xFF.
namespace wire {

inline constexpr std::size_t kHeaderBytes = 12;
inline constexpr std::uint16_t kNoGroup = 0xFFFF;
inline constexpr std::uint8_t kNoSymbol = 0xFF;

inline void write_packet(ByteWriter& out, const Packet& p) {
    out.u32(p.id.channel);
    out.u32(p.id.index);
    out.u8(static_cast<std::uint8_t>(p.kind));
    out.u16(p.group.value_or(kNoGroup));
    out.u8(p.symbol_index.value_or(kNoSymbol));
    out.raw(p.payload);
}

inline Bytes encode(const Packet& p) {
    ByteWriter out;
    write_packet(out, p);
    return std::move(out).take();
}

inline Packet read_packet(ByteReader& in, std::size_t payload_bytes) {
    Packet p;
    in.require(kHeaderBytes, "packet header");
    p.id.channel = in.u32();
    p.id.index = in.u32();
    const std::size_t kind_at = in.offset();
    const std::uint8_t kind = in.u8();
    if (kind > 1) throw FormatError("unknown packet kind " + std::to_string(kind), kind_at);
    p.kind = static_cast<PacketKind>(kind);
    if (std::uint16_t group = in.u16(); group != kNoGroup) p.group = group;
    if (std::uint8_t sym = in.u8(); sym != kNoSymbol) p.symbol_index = sym;
    auto payload = in.raw(payload_bytes, "packet payload");
    p.payload.assign(payload.begin(), payload.end());
    return p;
}

inline Packet decode(std::span<const std::uint8_t> bytes, std::size_t payload_bytes) {
    ByteReader in(bytes);
    Packet p = read_packet(in, payload_bytes);
    in.expect_end();
    return p;
}

// Packet stream file: "PKS1" | payload_bytes:u32 | count:u32 | count wire images.
inline Bytes encode_stream(std::span<const Packet> packets, std::size_t payload_bytes) {
    ByteWriter out;
    out.reserve(12 + packets.size() * (kHeaderBytes + payload_bytes));
    out.raw(std::array<std::uint8_t, 4>{'P', 'K', 'S', '1'});
    out.u32(static_cast<std::uint32_t>(payload_bytes));
    out.u32(static_cast<std::uint32_t>(packets.size()));
    for (const Packet& p : packets) {
        if (p.payload.size() != payload_bytes) {
            throw IntegrityError("packet " + to_string(p.id) + " payload length differs from stream");
        }
        write_packet(out, p);
    }
    return std::move(out).take();
}

struct Stream {
    std::size_t payload_bytes = 0;
    std::vector<Packet> packets;
};

inline Stream decode_stream(std::span<const std::uint8_t> bytes) {
    ByteReader in(bytes);
    auto magic = in.raw(4, "stream magic");
    if (!(magic[0] == 'P' && magic[1] == 'K' && magic[2] == 'S' && magic[3] == '1')) {
        throw FormatError("bad magic, expected PKS1", 0);
    }
    Stream s;
    s.payload_bytes = in.u32("payload length");
    const std::uint32_t count = in.u32("packet count");
    in.require(static_cast<std::size_t>(count) * (kHeaderBytes + s.payload_bytes), "packet stream");
    s.packets.reserve(count);
    for (std::uint32_t k = 0; k < count; ++k) s.packets.push_back(read_packet(in, s.payload_bytes));
    in.expect_end();
    return s;
}

} // namespace wire

} // namespace ulp
