#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>

#include "meshsim/adversary/profile.hpp"
#include "meshsim/aodv/packet.hpp"
#include "meshsim/engine/simulator.hpp"

namespace meshsim::aodv {

/// Application flow. T_max and B_min only matter to the qos protocol.
struct FlowSpec {
    std::int32_t id = 0;
    NodeId src;
    NodeId dest;
    double rate = 10.0;  // packets per second
    std::uint32_t packet_size = 512;
    SimTime start = SimTime::seconds(1.0);
    SimTime stop = SimTime::max();
    SimTime t_max = SimTime::millis(100);
    double b_min = 1000.0;  // bytes per second
};

/// Protocol stack of one node as seen by the harness.
class RoutingAgent : public engine::NodeAgent {
public:
    RoutingAgent(engine::Simulator& sim, NodeId self, std::optional<adversary::AttackProfile> profile)
        : sim_(sim), self_(self), profile_(std::move(profile)) {}

    NodeId id() const { return self_; }
    const std::optional<adversary::AttackProfile>& profile() const { return profile_; }

    virtual void start() {}
    virtual void send_data(const FlowSpec& flow, std::uint32_t seq) = 0;
    virtual void originate_discovery(NodeId dest, bool force) = 0;
    /// Per-neighbor verdicts from the local detection monitor (true = selfish).
    virtual void apply_detection(const std::map<NodeId, bool>&) {}
    /// Next hop towards `dest` for path reconstruction, if any.
    virtual std::optional<NodeId> next_hop(NodeId dest) = 0;

    std::function<void(NodeId origin, NodeId target)> on_route;
    std::function<void(const Data& data, SimTime latency)> on_deliver;

    std::uint64_t originated_rreqs() const { return originated_rreqs_; }

protected:
    void log(engine::TraceKind kind, const Packet* p, NodeId dst = NodeId::broadcast(),
             engine::DropCause cause = engine::DropCause::None) {
        sim_.log(kind, self_, dst, p, cause);
    }
    void drop_adversary(const Packet& p) { log(engine::TraceKind::Drop, &p, NodeId::broadcast(), engine::DropCause::Adversary); }
    void deliver(const Data& d) {
        engine::TraceRecord r;
        r.time = sim_.now();
        r.kind = engine::TraceKind::Deliver;
        r.src = d.src;
        r.dst = self_;
        r.type = PacketType::Data;
        r.flow_id = d.flow_id;
        r.latency_us = (sim_.now() - d.created).ticks();
        sim_.log(r);
        if (on_deliver) on_deliver(d, sim_.now() - d.created);
    }

    engine::Simulator& sim_;
    NodeId self_;
    std::optional<adversary::AttackProfile> profile_;
    std::uint64_t originated_rreqs_ = 0;
};

}  // namespace meshsim::aodv
