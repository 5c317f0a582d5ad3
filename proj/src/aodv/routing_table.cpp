#include "meshsim/aodv/routing_table.hpp"

#include <algorithm>

namespace meshsim::aodv {

bool fresher(const RouteEntry& candidate, const RouteEntry& current, SimTime now) {
    if (!current.valid || current.expires <= now) {
        // A stale entry is replaced, but never by an older sequence number.
        return !(current.seq_valid && candidate.seq_valid && candidate.dest_seq < current.dest_seq);
    }
    if (!current.seq_valid) return true;
    if (!candidate.seq_valid) return false;
    if (candidate.dest_seq != current.dest_seq) return candidate.dest_seq > current.dest_seq;
    return candidate.hop_count < current.hop_count;
}

RouteEntry* RoutingTable::lookup(NodeId dest, SimTime now) {
    auto it = entries_.find(dest);
    if (it == entries_.end()) return nullptr;
    if (it->second.valid && it->second.expires <= now) it->second.valid = false;
    return it->second.valid ? &it->second : nullptr;
}

RouteEntry* RoutingTable::find(NodeId dest) {
    auto it = entries_.find(dest);
    return it == entries_.end() ? nullptr : &it->second;
}

const RouteEntry* RoutingTable::find(NodeId dest) const {
    auto it = entries_.find(dest);
    return it == entries_.end() ? nullptr : &it->second;
}

bool RoutingTable::offer(const RouteEntry& candidate, SimTime now) {
    auto it = entries_.find(candidate.dest);
    if (it == entries_.end()) {
        entries_.emplace(candidate.dest, candidate);
        return true;
    }
    RouteEntry& current = it->second;
    if (fresher(candidate, current, now)) {
        current = candidate;
        current.valid = true;
        return true;
    }
    if (current.valid && current.next_hop == candidate.next_hop && current.dest_seq == candidate.dest_seq) {
        current.expires = std::max(current.expires, candidate.expires);
    }
    return false;
}

void RoutingTable::invalidate(NodeId dest) {
    if (auto* e = find(dest)) e->valid = false;
}

}  // namespace meshsim::aodv
