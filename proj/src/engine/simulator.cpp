#include "meshsim/engine/simulator.hpp"

#include <algorithm>
#include <stdexcept>

namespace meshsim::engine {

Simulator::Simulator(Topology topology, EngineConfig config)
    : topology_(std::move(topology)),
      config_(config),
      agents_(static_cast<std::size_t>(topology_.size()), nullptr),
      busy_until_(static_cast<std::size_t>(topology_.size())),
      backlog_(static_cast<std::size_t>(topology_.size()), 0) {}

void Simulator::attach(NodeId node, NodeAgent* agent) { agents_.at(node.index()) = agent; }

Rng& Simulator::rng(NodeId node, StreamPurpose purpose) {
    const auto key = std::pair{node.value(), purpose};
    auto it = rngs_.find(key);
    if (it == rngs_.end()) it = rngs_.emplace(key, Rng::derive(config_.seed, node.value(), purpose)).first;
    return it->second;
}

void Simulator::schedule_at(SimTime at, NodeId target, EventKind kind, std::function<void()> fn) {
    if (at < now_) at = now_;
    if (queue_.size() >= config_.event_cap) {
        overflow_ = true;
        return;
    }
    queue_.push_back(Event{at, seq_++, target, kind, std::move(fn)});
    std::push_heap(queue_.begin(), queue_.end(), Later{});
}

void Simulator::log(TraceKind kind, NodeId src, NodeId dst, const aodv::Packet* packet, DropCause cause) {
    TraceRecord r;
    r.time = now_;
    r.kind = kind;
    r.src = src;
    r.dst = dst;
    if (packet) {
        r.type = packet->type();
        r.flow_id = packet->trace_flow();
    }
    r.cause = cause;
    trace_.append(r);
}

void Simulator::transmit(NodeId sender, NodeId next_hop, aodv::Packet packet) {
    auto shared = std::make_shared<const aodv::Packet>(std::move(packet));
    if (config_.link_rate_Bps <= 0.0) {
        emit(sender, next_hop, shared, SimTime(0));
        return;
    }
    const auto idx = sender.index();
    if (config_.queue_limit > 0 && backlog_[idx] >= config_.queue_limit) {
        log(TraceKind::Drop, sender, next_hop, shared.get(), DropCause::Queue);
        return;
    }
    const SimTime airtime = SimTime::seconds(static_cast<double>(shared->wire_size()) / config_.link_rate_Bps);
    const SimTime start = std::max(now_, busy_until_[idx]);
    busy_until_[idx] = start + airtime;
    if (start == now_) {
        emit(sender, next_hop, shared, airtime);
        return;
    }
    ++backlog_[idx];
    schedule_at(start, sender, EventKind::Delivery, [this, sender, next_hop, shared, airtime] {
        --backlog_[sender.index()];
        emit(sender, next_hop, shared, airtime);
    });
}

void Simulator::emit(NodeId sender, NodeId next_hop, const std::shared_ptr<const aodv::Packet>& packet, SimTime airtime) {
    TraceRecord tx;
    tx.time = now_;
    tx.kind = TraceKind::Tx;
    tx.src = sender;
    tx.dst = next_hop.valid() ? next_hop : NodeId::broadcast();
    tx.type = packet->type();
    tx.flow_id = packet->trace_flow();
    tx.addressee = tx.dst;
    trace_.append(tx);
    observe(sender, sender, tx.dst, true, *packet);

    const bool unicast = next_hop.valid();
    if (unicast && !topology_.is_neighbor(sender, next_hop)) {
        log(TraceKind::Drop, sender, next_hop, packet.get(), DropCause::LinkLoss);
    }
    const SimTime arrival = now_ + airtime + topology_.hop_delay();
    Rng& radio = rng(sender, StreamPurpose::Radio);
    for (NodeId n : topology_.neighbors(sender)) {
        const bool addressed = unicast && n == next_hop;
        if (radio.bernoulli(topology_.loss(sender, n))) {
            log(TraceKind::Drop, sender, n, packet.get(), DropCause::LinkLoss);
            if (addressed) {
                schedule_at(arrival, n, EventKind::Delivery, [this, n, sender, packet] {
                    if (auto* agent = agents_[n.index()]) agent->radio_loss(*packet, sender);
                });
            }
            continue;
        }
        const RxMode mode = !unicast ? RxMode::Broadcast : (addressed ? RxMode::Addressed : RxMode::Overhear);
        schedule_at(arrival, n, EventKind::Delivery, [this, n, sender, packet, mode, next_hop] {
            TraceRecord rx;
            rx.time = now_;
            rx.kind = mode == RxMode::Overhear ? TraceKind::Overhear : TraceKind::Rx;
            rx.src = sender;
            rx.dst = n;
            rx.type = packet->type();
            rx.flow_id = packet->trace_flow();
            rx.addressee = next_hop.valid() ? next_hop : NodeId::broadcast();
            trace_.append(rx);
            observe(n, sender, rx.addressee, false, *packet);
            if (auto* agent = agents_[n.index()]) agent->receive(*packet, sender, mode);
        });
    }
}

void Simulator::tunnel(NodeId from, NodeId to, aodv::Packet packet, SimTime delay) {
    auto shared = std::make_shared<const aodv::Packet>(std::move(packet));
    log(TraceKind::Tunnel, from, to, shared.get());
    schedule_at(now_ + delay, to, EventKind::Delivery, [this, from, to, shared] {
        if (auto* agent = agents_[to.index()]) agent->receive(*shared, from, RxMode::Tunnel);
    });
}

void Simulator::observe(NodeId observer, NodeId transmitter, NodeId addressee, bool own, const aodv::Packet& packet) {
    if (!observer_) return;
    observer_(Frame{now_, observer, transmitter, addressee, own, &packet});
}

RunResult Simulator::run(SimTime until) {
    RunResult result;
    while (!queue_.empty() && !overflow_) {
        if (queue_.front().at > until) break;
        std::pop_heap(queue_.begin(), queue_.end(), Later{});
        Event ev = std::move(queue_.back());
        queue_.pop_back();
        now_ = ev.at;
        ev.fn();
        ++result.events;
    }
    result.overflow = overflow_;
    result.stopped_at = now_;
    return result;
}

}  // namespace meshsim::engine
