#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "meshsim/core/types.hpp"
#include "meshsim/crypto/hash.hpp"
#include "meshsim/crypto/mac.hpp"

namespace meshsim::aodv {

enum class PacketType : std::uint8_t { Rreq = 1, Rrep = 2, Rerr = 3, Data = 4, Hello = 5, Probe = 6 };

std::string_view to_string(PacketType type);
std::optional<PacketType> packet_type_from_string(std::string_view s);

/// Source/destination pair of one flood, as seen by a monitor.
struct LmuKey {
    NodeId source;
    NodeId destination;

    std::int64_t code() const { return static_cast<std::int64_t>(source.value()) * 65536 + destination.value(); }
    static LmuKey from_code(std::int64_t code) {
        return {NodeId(static_cast<std::int32_t>(code / 65536)), NodeId(static_cast<std::int32_t>(code % 65536))};
    }
    friend auto operator<=>(const LmuKey&, const LmuKey&) = default;
};

struct Rreq {
    NodeId src;
    std::uint32_t src_seq = 0;
    std::uint32_t bcast_id = 0;
    NodeId dest;
    std::uint32_t dest_seq_known = 0;
    std::uint8_t hop_count = 0;
    std::uint8_t ttl = 0;
    NodeId next_to_source;
    bool duplicate_flag = false;
    std::vector<NodeId> route;  // route record, filled by the qos protocol only
};

enum RrepFlags : std::uint8_t {
    kRrepCandidate = 1,     // one of several replies from the destination (qos)
    kRrepProbeReport = 2,   // carries the average probe delay (qos)
    kRrepReroute = 4,       // destination-initiated reroute (qos)
};

struct Rrep {
    NodeId target;  // destination the route leads to
    NodeId origin;  // originator of the request being answered
    std::uint32_t dest_seq = 0;
    std::uint8_t hop_count = 0;
    SimTime lifetime;
    NodeId next_to_destination;
    std::uint8_t flags = 0;
    std::int32_t flow_id = -1;
    std::uint32_t attempt = 0;
    std::int64_t probe_delay_us = 0;
    std::uint32_t reliability_milli = 0;  // sum of link reliabilities along the path, x1000
    std::vector<NodeId> route;            // full source..target path (qos)
};

struct Unreachable {
    NodeId dest;
    std::uint32_t dest_seq = 0;
    friend bool operator==(const Unreachable&, const Unreachable&) = default;
};

enum class RerrReason : std::uint8_t { LinkBreak = 0, FlowMiss = 1, Bandwidth = 2 };

struct Rerr {
    std::vector<Unreachable> unreachable;
    NodeId notify;  // source to be notified (qos unicast RERR), none for broadcast
    std::int32_t flow_id = -1;
    RerrReason reason = RerrReason::LinkBreak;
    std::vector<NodeId> route;  // reverse path towards `notify`
};

struct Data {
    std::int32_t flow_id = -1;
    NodeId src;
    NodeId dest;
    std::uint32_t seq = 0;
    SimTime created;
    std::uint32_t size = 0;
    std::uint32_t link_seq = 0;
    SimTime hop_sent_at;
    std::vector<NodeId> route;
};

struct Hello {
    NodeId id;
    std::uint64_t g = 0;
    std::uint32_t blom_index = 0;
    bool reply = false;
    NodeId to;
    std::uint64_t nonce = 0;
    crypto::Bytes sealed_gtk;
};

struct Probe {
    std::int32_t flow_id = -1;
    NodeId src;
    NodeId dest;
    std::uint16_t index = 0;
    std::uint16_t total = 0;
    std::uint32_t attempt = 0;
    SimTime sent_at;
    std::uint32_t size = 0;
    std::uint8_t hop_index = 0;
    std::vector<NodeId> route;
};

using Body = std::variant<Rreq, Rrep, Rerr, Data, Hello, Probe>;

struct SaodvExtension {
    crypto::MacTag signature;
    std::uint8_t max_hops = 0;
    crypto::Digest anchor;
    crypto::Digest hca;
};

struct Packet {
    NodeId sender;  // claimed last-hop transmitter
    std::uint64_t uid = 0;
    Body body;
    std::optional<SaodvExtension> saodv;
    std::optional<crypto::MacTag> mac;

    PacketType type() const { return static_cast<PacketType>(body.index() + 1); }
    template <class T> T& as() { return std::get<T>(body); }
    template <class T> const T& as() const { return std::get<T>(body); }
    template <class T> bool is() const { return std::holds_alternative<T>(body); }

    /// Flow column of the trace: the LMU code for RREQ/RREP, the flow id for
    /// data and probes, -1 otherwise.
    std::int64_t trace_flow() const;
    std::optional<LmuKey> lmu() const;

    /// Bytes on the air: header plus data payload.
    std::size_t wire_size() const;
};

/// Fixed-width big-endian serialization in field declaration order. The MAC
/// field, when present, is appended last unless `with_mac` is false.
crypto::Bytes encode(const Packet& p, bool with_mac = true);
Packet decode(std::span<const std::uint8_t> bytes);

/// Serialization of the fields a SAODV signature covers: the immutable part
/// of the body, plus the chain length and anchor. For RERR the claimed sender
/// is included since each hop signs its own error message.
crypto::Bytes encode_signed_part(const Packet& p);

}  // namespace meshsim::aodv
