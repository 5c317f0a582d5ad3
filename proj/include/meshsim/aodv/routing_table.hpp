#pragma once

#include <cstdint>
#include <map>
#include <optional>

#include "meshsim/core/types.hpp"

namespace meshsim::aodv {

struct RouteEntry {
    NodeId dest;
    NodeId next_hop;
    int hop_count = 0;
    std::uint32_t dest_seq = 0;
    bool seq_valid = false;
    SimTime expires;
    bool valid = true;
};

/// True when `candidate` should replace `current`: the current entry is
/// unusable, or the candidate has a higher sequence number, or the same
/// sequence number with fewer hops.
bool fresher(const RouteEntry& candidate, const RouteEntry& current, SimTime now);

class RoutingTable {
public:
    /// Valid, unexpired entry. Expired entries are invalidated on the way.
    RouteEntry* lookup(NodeId dest, SimTime now);
    /// Raw entry regardless of validity.
    RouteEntry* find(NodeId dest);
    const RouteEntry* find(NodeId dest) const;

    /// Installs `candidate` when fresher; otherwise refreshes the lifetime
    /// of an identical route. Returns true if the entry was replaced.
    bool offer(const RouteEntry& candidate, SimTime now);

    void invalidate(NodeId dest);
    const std::map<NodeId, RouteEntry>& entries() const { return entries_; }

private:
    std::map<NodeId, RouteEntry> entries_;
};

}  // namespace meshsim::aodv
