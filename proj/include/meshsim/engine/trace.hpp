#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include "meshsim/aodv/packet.hpp"
#include "meshsim/core/types.hpp"

namespace meshsim::engine {

enum class TraceKind : std::uint8_t {
    Tx,
    Rx,
    Overhear,
    Tunnel,
    Drop,
    Deliver,
    DropTtl,
    DropDuplicate,
    DropNoRoute,
    DropScope,
    DropGate,
    DropNoKey,
    DiscoveryDeferred,
    RejectBadSignature,
    RejectBadHca,
    RejectUnknownKey,
    RejectTagMismatch,
};

enum class DropCause : std::uint8_t { None, LinkLoss, Adversary, Queue };

std::string_view to_string(TraceKind kind);
std::string_view to_string(DropCause cause);
std::optional<TraceKind> trace_kind_from_string(std::string_view s);
std::optional<DropCause> drop_cause_from_string(std::string_view s);

struct TraceRecord {
    SimTime time;
    TraceKind kind = TraceKind::Tx;
    NodeId src;
    NodeId dst;  // -1 for broadcast; the observing node for rx/overhear rows
    std::optional<aodv::PacketType> type;
    std::int64_t flow_id = -1;
    DropCause cause = DropCause::None;

    // In-memory only.
    NodeId addressee;            // link-layer next hop of the frame, -1 for broadcast
    std::int64_t latency_us = 0;  // end-to-end delay on deliver rows
};

class TraceLog {
public:
    void append(const TraceRecord& r) { records_.push_back(r); }
    const std::vector<TraceRecord>& records() const { return records_; }
    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }

    void write_csv(std::ostream& out) const;
    /// Parses the CSV export; throws std::invalid_argument naming the line on malformed input.
    static TraceLog read_csv(std::istream& in);

private:
    std::vector<TraceRecord> records_;
};

}  // namespace meshsim::engine
