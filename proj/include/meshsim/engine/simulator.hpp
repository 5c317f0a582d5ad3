#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <vector>

#include "meshsim/aodv/packet.hpp"
#include "meshsim/core/rng.hpp"
#include "meshsim/core/types.hpp"
#include "meshsim/engine/topology.hpp"
#include "meshsim/engine/trace.hpp"

namespace meshsim::engine {

enum class RxMode : std::uint8_t { Addressed, Broadcast, Overhear, Tunnel };

/// Protocol logic attached to one node.
class NodeAgent {
public:
    virtual ~NodeAgent() = default;
    virtual void receive(const aodv::Packet& packet, NodeId transmitter, RxMode mode) = 0;
    /// A unicast frame addressed to this node was lost on the air. Models the
    /// link layer's reassembly-failure indication.
    virtual void radio_loss(const aodv::Packet&, NodeId /*transmitter*/) {}
};

/// Every frame a node sends or successfully hears, including overheard
/// unicasts. Used by the detection monitors.
struct Frame {
    SimTime time;
    NodeId observer;
    NodeId transmitter;
    NodeId addressee;  // -1 for broadcast
    bool own = false;
    const aodv::Packet* packet = nullptr;
};

enum class EventKind : std::uint8_t { Delivery, Timer, Application };

struct EngineConfig {
    std::uint64_t seed = 1;
    std::size_t event_cap = 2'000'000;  // pending events; exceeding it aborts the run
    double link_rate_Bps = 0.0;         // 0: transmissions take no air time
    int queue_limit = 0;                // 0: unbounded transmit queue
};

struct RunResult {
    bool overflow = false;
    std::uint64_t events = 0;
    SimTime stopped_at;
};

class Simulator {
public:
    Simulator(Topology topology, EngineConfig config);

    SimTime now() const { return now_; }
    const Topology& topology() const { return topology_; }
    const EngineConfig& config() const { return config_; }
    TraceLog& trace() { return trace_; }
    const TraceLog& trace() const { return trace_; }

    void attach(NodeId node, NodeAgent* agent);
    void set_frame_observer(std::function<void(const Frame&)> fn) { observer_ = std::move(fn); }

    /// Per-node stream for a purpose, derived from (seed, node, purpose).
    Rng& rng(NodeId node, StreamPurpose purpose);
    /// Scenario-wide stream for a purpose.
    Rng& global_rng(StreamPurpose purpose) { return rng(NodeId(-1), purpose); }

    void schedule_at(SimTime at, NodeId target, EventKind kind, std::function<void()> fn);
    void schedule_in(SimTime delay, NodeId target, std::function<void()> fn) {
        schedule_at(now_ + delay, target, EventKind::Timer, std::move(fn));
    }

    /// Sends a frame. `next_hop` = NodeId::broadcast() broadcasts. Each
    /// neighbor runs an independent loss trial; surviving neighbors receive
    /// after the per-hop delay, non-addressees of a unicast as overhearers.
    void transmit(NodeId sender, NodeId next_hop, aodv::Packet packet);

    /// Out-of-band tunnel between colluding nodes: no loss, fixed delay.
    void tunnel(NodeId from, NodeId to, aodv::Packet packet, SimTime delay);

    void log(TraceRecord record) { trace_.append(record); }
    void log(TraceKind kind, NodeId src, NodeId dst, const aodv::Packet* packet, DropCause cause = DropCause::None);

    std::uint64_t next_uid() { return ++uid_; }

    RunResult run(SimTime until);

private:
    struct Event {
        SimTime at;
        std::uint64_t seq;
        NodeId target;
        EventKind kind;
        std::function<void()> fn;
    };
    struct Later {
        bool operator()(const Event& a, const Event& b) const {
            return a.at != b.at ? a.at > b.at : a.seq > b.seq;
        }
    };

    void emit(NodeId sender, NodeId next_hop, const std::shared_ptr<const aodv::Packet>& packet, SimTime airtime);
    void observe(NodeId observer, NodeId transmitter, NodeId addressee, bool own, const aodv::Packet& packet);

    Topology topology_;
    EngineConfig config_;
    SimTime now_;
    std::uint64_t seq_ = 0;
    std::uint64_t uid_ = 0;
    std::vector<Event> queue_;
    std::vector<NodeAgent*> agents_;
    std::map<std::pair<std::int32_t, StreamPurpose>, Rng> rngs_;
    std::vector<SimTime> busy_until_;
    std::vector<int> backlog_;
    std::function<void(const Frame&)> observer_;
    TraceLog trace_;
    bool overflow_ = false;
};

}  // namespace meshsim::engine
