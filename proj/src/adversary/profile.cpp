#include "meshsim/adversary/profile.hpp"

#include <array>

namespace meshsim::adversary {

namespace {

constexpr std::array<std::pair<Kind, std::string_view>, 9> kKinds{{
    {Kind::Blackhole, "blackhole"},
    {Kind::Grayhole, "grayhole"},
    {Kind::Selfish, "selfish"},
    {Kind::Rushing, "rushing"},
    {Kind::Wormhole, "wormhole"},
    {Kind::RreqFlood, "rreq_flood"},
    {Kind::RedirectHopZero, "redirect_hop_zero"},
    {Kind::RedirectSeqInflate, "redirect_seq_inflate"},
    {Kind::RerrFabricate, "rerr_fabricate"},
}};

constexpr std::array<std::pair<SelfishPolicy, std::string_view>, 4> kPolicies{{
    {SelfishPolicy::DropRreq, "drop_rreq"},
    {SelfishPolicy::DropRrep, "drop_rrep"},
    {SelfishPolicy::DropData, "drop_data"},
    {SelfishPolicy::DropAllForwarding, "drop_all_forwarding"},
}};

}  // namespace

std::string_view to_string(Kind kind) {
    for (const auto& [k, s] : kKinds) {
        if (k == kind) return s;
    }
    return "?";
}

std::optional<Kind> kind_from_string(std::string_view s) {
    for (const auto& [k, name] : kKinds) {
        if (name == s) return k;
    }
    return std::nullopt;
}

std::string_view to_string(SelfishPolicy policy) {
    for (const auto& [p, s] : kPolicies) {
        if (p == policy) return s;
    }
    return "?";
}

std::optional<SelfishPolicy> policy_from_string(std::string_view s) {
    for (const auto& [p, name] : kPolicies) {
        if (name == s) return p;
    }
    return std::nullopt;
}

bool AttackProfile::forwards_rreq() const {
    if (kind == Kind::Blackhole) return false;
    if (kind == Kind::Selfish) return policy != SelfishPolicy::DropRreq && policy != SelfishPolicy::DropAllForwarding;
    return true;
}

bool AttackProfile::forwards_rrep() const {
    if (kind == Kind::Selfish) return policy != SelfishPolicy::DropRrep && policy != SelfishPolicy::DropAllForwarding;
    return true;
}

bool AttackProfile::drop_data(Rng& rng) const {
    switch (kind) {
        case Kind::Blackhole: return true;
        case Kind::Grayhole:
        case Kind::Wormhole: return grayhole_forward_decision(*this, rng);
        case Kind::Selfish: return policy == SelfishPolicy::DropData || policy == SelfishPolicy::DropAllForwarding;
        default: return false;
    }
}

std::vector<std::string> validate_profiles(const ProfileMap& profiles, int node_count) {
    std::vector<std::string> errors;
    auto known = [&](NodeId n) { return n.valid() && n.value() < node_count; };
    for (const auto& [node, p] : profiles) {
        const std::string where = "adversary at node " + std::to_string(node.value());
        if (!known(node)) errors.push_back(where + ": unknown node");
        switch (p.kind) {
            case Kind::Grayhole:
                if (!(p.drop_prob >= 0.0 && p.drop_prob <= 1.0)) errors.push_back(where + ": drop_prob must lie in [0, 1]");
                break;
            case Kind::Wormhole: {
                if (!known(p.peer)) {
                    errors.push_back(where + ": wormhole peer missing or unknown");
                    break;
                }
                auto it = profiles.find(p.peer);
                if (it == profiles.end() || it->second.kind != Kind::Wormhole || it->second.peer != node) {
                    errors.push_back(where + ": wormhole peer " + std::to_string(p.peer.value()) + " does not reference it back");
                }
                if (p.tunnel_delay < SimTime(0)) errors.push_back(where + ": tunnel_delay must be non-negative");
                if (!(p.drop_prob >= 0.0 && p.drop_prob <= 1.0)) errors.push_back(where + ": drop_prob must lie in [0, 1]");
                break;
            }
            case Kind::RreqFlood:
                if (!(p.rate > 0.0)) errors.push_back(where + ": flood rate must be positive");
                break;
            case Kind::RerrFabricate:
                if (!known(p.target)) errors.push_back(where + ": rerr target missing or unknown");
                if (p.spoof.valid() && p.spoof.value() >= node_count + 1000) errors.push_back(where + ": spoofed identity out of range");
                break;
            default: break;
        }
    }
    return errors;
}

aodv::Rrep blackhole_reply(const AttackProfile& profile, const aodv::Rreq& rreq, NodeId self, SimTime lifetime) {
    aodv::Rrep rrep;
    rrep.target = rreq.dest;
    rrep.origin = rreq.src;
    rrep.dest_seq = rreq.dest_seq_known + profile.inflation;
    rrep.hop_count = 1;
    rrep.lifetime = lifetime;
    rrep.next_to_destination = self;
    return rrep;
}

bool grayhole_forward_decision(const AttackProfile& profile, Rng& rng) { return rng.bernoulli(profile.drop_prob); }

bool control_mutation(const AttackProfile& profile, aodv::Packet& packet) {
    if (profile.kind == Kind::RedirectHopZero) {
        if (auto* q = std::get_if<aodv::Rreq>(&packet.body)) {
            q->hop_count = 0;
            return true;
        }
        if (auto* r = std::get_if<aodv::Rrep>(&packet.body)) {
            r->hop_count = 0;
            return true;
        }
    }
    if (profile.kind == Kind::RedirectSeqInflate) {
        if (auto* r = std::get_if<aodv::Rrep>(&packet.body)) {
            r->dest_seq += profile.delta;
            return true;
        }
    }
    return false;
}

aodv::Rerr fabricate_rerr(const AttackProfile& profile) {
    aodv::Rerr rerr;
    rerr.unreachable.push_back({profile.target, profile.dsn});
    return rerr;
}

}  // namespace meshsim::adversary
