#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "meshsim/aodv/packet.hpp"
#include "meshsim/core/rng.hpp"
#include "meshsim/core/types.hpp"

namespace meshsim::adversary {

enum class Kind {
    Blackhole,
    Grayhole,
    Selfish,
    Rushing,
    Wormhole,
    RreqFlood,
    RedirectHopZero,
    RedirectSeqInflate,
    RerrFabricate,
};

enum class SelfishPolicy { DropRreq, DropRrep, DropData, DropAllForwarding };

std::string_view to_string(Kind kind);
std::optional<Kind> kind_from_string(std::string_view s);
std::string_view to_string(SelfishPolicy policy);
std::optional<SelfishPolicy> policy_from_string(std::string_view s);

struct AttackProfile {
    Kind kind = Kind::Blackhole;
    std::uint32_t inflation = 1;              // Blackhole: dest_seq increment
    double drop_prob = 1.0;                   // Grayhole; Wormhole data plane
    SelfishPolicy policy = SelfishPolicy::DropAllForwarding;
    NodeId peer;                              // Wormhole
    SimTime tunnel_delay = SimTime::micros(100);
    bool tunnel_data = false;
    double rate = 0.0;                        // RreqFlood: floods per second
    std::uint32_t delta = 10;                 // RedirectSeqInflate
    NodeId target;                            // RerrFabricate
    std::uint32_t dsn = 1u << 30;
    NodeId spoof;                             // RerrFabricate claimed identity; none = self
    SimTime start = SimTime::seconds(1.0);    // RreqFlood / RerrFabricate
    SimTime stop = SimTime::max();            // RreqFlood
    SimTime period;                           // RerrFabricate repeat interval, 0 = once

    bool forwards_rreq() const;
    bool forwards_rrep() const;
    /// Zero forwarding jitter (rushing, and wormhole re-emission).
    bool rushes() const { return kind == Kind::Rushing || kind == Kind::Wormhole; }
    /// Data-plane decision for a packet this node would forward.
    bool drop_data(Rng& rng) const;
};

using ProfileMap = std::map<NodeId, AttackProfile>;

/// Configuration checks: wormhole pairing, referenced nodes, parameter ranges.
std::vector<std::string> validate_profiles(const ProfileMap& profiles, int node_count);

/// Forged reply to a request: hop count 1, inflated destination sequence.
aodv::Rrep blackhole_reply(const AttackProfile& profile, const aodv::Rreq& rreq, NodeId self, SimTime lifetime);

/// True when the grayhole drops this packet.
bool grayhole_forward_decision(const AttackProfile& profile, Rng& rng);

/// Wire tampering on a control packet the node relays. Returns true if the
/// packet was changed.
bool control_mutation(const AttackProfile& profile, aodv::Packet& packet);

/// Error message claiming the target is unreachable with a high sequence number.
aodv::Rerr fabricate_rerr(const AttackProfile& profile);

}  // namespace meshsim::adversary
