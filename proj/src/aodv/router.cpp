#include "meshsim/aodv/router.hpp"

#include <algorithm>

namespace meshsim::aodv {

using engine::DropCause;
using engine::RxMode;
using engine::TraceKind;
using secure::Protocol;
using secure::Verdict;

namespace {

TraceKind reject_kind(Verdict v) {
    switch (v) {
        case Verdict::BadSignature: return TraceKind::RejectBadSignature;
        case Verdict::BadHca: return TraceKind::RejectBadHca;
        case Verdict::UnknownKey: return TraceKind::RejectUnknownKey;
        default: return TraceKind::RejectTagMismatch;
    }
}

bool is_control(const Packet& p) { return p.is<Rreq>() || p.is<Rrep>() || p.is<Rerr>(); }

}  // namespace

Router::Router(engine::Simulator& sim, NodeId self, RouterParams params, std::optional<adversary::AttackProfile> profile,
               const secure::KeyAuthority* authority)
    : RoutingAgent(sim, self, std::move(profile)), params_(params), authority_(authority) {
    if (params_.protocol == Protocol::Seaodv) {
        keys_ = std::make_unique<secure::SeaodvKeys>(self, *authority_, sim_.rng(self, StreamPurpose::Crypto));
    }
    if (authority_) chain_length_ = authority_->chain_length() > 0 ? authority_->chain_length() : params_.ttl;
    if (chain_length_ < params_.ttl) chain_length_ = params_.ttl;
}

SimTime Router::jitter() {
    const auto lo = params_.jitter_lo.ticks();
    const auto hi = std::max(lo, params_.jitter_hi.ticks());
    auto& rng = sim_.rng(self_, StreamPurpose::Jitter);
    return SimTime(static_cast<std::int64_t>(rng.uniform_int(static_cast<std::uint64_t>(lo), static_cast<std::uint64_t>(hi))));
}

SimTime Router::discovery_wait() const {
    if (params_.discovery_timeout > SimTime(0)) return params_.discovery_timeout;
    SimTime per_hop = sim_.topology().hop_delay() + params_.jitter_hi;
    if (params_.randomized_forwarding) per_hop += params_.collect_window;
    return 2 * params_.ttl * per_hop + (params_.randomized_forwarding ? params_.collect_window : SimTime(0)) + SimTime::millis(10);
}

void Router::start() {
    if (keys_) {
        sim_.schedule_in(jitter(), self_, [this] {
            Packet hello = keys_->hello_request();
            hello.uid = sim_.next_uid();
            sim_.transmit(self_, NodeId::broadcast(), hello);
        });
    }
    if (!profile_) return;
    if (profile_->kind == adversary::Kind::RreqFlood && profile_->rate > 0.0) {
        const SimTime interval = SimTime::seconds(1.0 / profile_->rate);
        const NodeId bogus(sim_.topology().size() + 1);
        auto tick = std::make_shared<std::function<void()>>();
        *tick = [this, interval, bogus, tick] {
            if (sim_.now() >= profile_->stop) return;
            emit_rreq(bogus);
            sim_.schedule_in(std::max(interval, SimTime(1)), self_, *tick);
        };
        sim_.schedule_at(profile_->start, self_, engine::EventKind::Timer, *tick);
    }
    if (profile_->kind == adversary::Kind::RerrFabricate) {
        auto tick = std::make_shared<std::function<void()>>();
        *tick = [this, tick] {
            fabricate_rerr();
            if (profile_->period > SimTime(0)) sim_.schedule_in(profile_->period, self_, *tick);
        };
        sim_.schedule_at(profile_->start, self_, engine::EventKind::Timer, *tick);
    }
}

std::optional<NodeId> Router::next_hop(NodeId dest) {
    if (auto* e = table_.lookup(dest, sim_.now())) return e->next_hop;
    return std::nullopt;
}

// ---- receive path ------------------------------------------------------------

bool Router::verify(const Packet& p) {
    if (!is_control(p)) return true;
    Verdict v = Verdict::Accept;
    if (params_.protocol == Protocol::Saodv) {
        const NodeId signer = secure::saodv_signer(p);
        if (!authority_->has_signing_key(signer)) {
            v = Verdict::BadSignature;
        } else {
            v = secure::saodv_verify(p, authority_->signing_key(signer), authority_->hasher());
        }
    } else if (params_.protocol == Protocol::Seaodv) {
        v = keys_->verify(p);
        if (v == Verdict::UnknownKey && p.sender.valid() && p.sender.value() < sim_.topology().size()) {
            auto it = last_rehello_.find(p.sender);
            if (it == last_rehello_.end() || sim_.now() - it->second >= params_.rehello_interval) {
                last_rehello_[p.sender] = sim_.now();
                Packet hello = keys_->hello_request(p.sender);
                hello.uid = sim_.next_uid();
                sim_.transmit(self_, p.sender, hello);
            }
        }
    }
    if (v == Verdict::Accept) return true;
    log(reject_kind(v), &p, p.sender);
    return false;
}

void Router::handle_hello(const Packet& packet, NodeId, RxMode) {
    if (!keys_) return;
    auto reply = keys_->on_hello(packet, sim_.rng(self_, StreamPurpose::Crypto));
    if (!reply) return;
    reply->uid = sim_.next_uid();
    const NodeId to = reply->as<Hello>().to;
    sim_.transmit(self_, to, *reply);
}

void Router::receive(const Packet& packet, NodeId transmitter, RxMode mode) {
    if (mode == RxMode::Overhear) return;
    if (packet.is<Hello>()) {
        handle_hello(packet, transmitter, mode);
        return;
    }
    NodeId from = transmitter;
    if (mode != RxMode::Tunnel) {
        if (!verify(packet)) return;
        from = packet.sender;
    }
    if (packet.is<Rreq>()) {
        const auto& r = packet.as<Rreq>();
        if (mode != RxMode::Tunnel && is_adversary(adversary::Kind::Wormhole) && r.src != self_ &&
            !floods_.count({r.src, r.bcast_id})) {
            sim_.tunnel(self_, profile_->peer, packet, profile_->tunnel_delay);
        }
        handle_rreq(packet, from);
    } else if (packet.is<Rrep>()) {
        handle_rrep(packet, from);
    } else if (packet.is<Rerr>()) {
        handle_rerr(packet, from);
    } else if (packet.is<Data>()) {
        forward_data(packet);
    }
}

// ---- discovery -----------------------------------------------------------------

void Router::originate_discovery(NodeId dest, bool force) {
    if (dest == self_) return;
    if (!force && table_.lookup(dest, sim_.now())) return;
    const SimTime now = sim_.now();
    while (!recent_originations_.empty() && now - recent_originations_.front() >= SimTime::seconds(1.0)) {
        recent_originations_.pop_front();
    }
    if (params_.rreq_rate_limit > 0 && static_cast<int>(recent_originations_.size()) >= params_.rreq_rate_limit) {
        Packet probe;
        probe.sender = self_;
        Rreq r;
        r.src = self_;
        r.dest = dest;
        probe.body = r;
        log(TraceKind::DiscoveryDeferred, &probe, dest);
        if (deferred_.insert(dest).second) {
            const SimTime retry = recent_originations_.front() + SimTime::seconds(1.0) - now;
            sim_.schedule_in(retry, self_, [this, dest, force] {
                deferred_.erase(dest);
                originate_discovery(dest, force);
            });
        }
        return;
    }
    recent_originations_.push_back(now);
    start_discovery(dest);
}

void Router::start_discovery(NodeId dest) {
    auto& d = discoveries_[dest];
    const std::uint64_t gen = ++d.generation;
    emit_rreq(dest);
    sim_.schedule_in(discovery_wait(), self_, [this, dest, gen] { discovery_timeout(dest, gen); });
}

void Router::emit_rreq(NodeId dest) {
    ++own_seq_;
    ++bcast_id_;
    Rreq r;
    r.src = self_;
    r.src_seq = own_seq_;
    r.bcast_id = bcast_id_;
    r.dest = dest;
    if (const auto* e = table_.find(dest); e && e->seq_valid) r.dest_seq_known = e->dest_seq;
    r.ttl = static_cast<std::uint8_t>(std::clamp(params_.ttl, 1, 255));
    r.next_to_source = self_;
    floods_[{self_, bcast_id_}].copies = 1;
    Packet p;
    p.sender = self_;
    p.body = r;
    if (params_.protocol == Protocol::Saodv) {
        secure::saodv_extend(p, authority_->signing_key(self_), authority_->hasher(), sim_.rng(self_, StreamPurpose::Crypto),
                             chain_length_, authority_->tag_bytes());
    }
    ++originated_rreqs_;
    send(std::move(p), NodeId::broadcast(), false);
}

void Router::discovery_timeout(NodeId dest, std::uint64_t generation) {
    auto it = discoveries_.find(dest);
    if (it == discoveries_.end() || it->second.generation != generation) return;
    if (table_.lookup(dest, sim_.now())) {
        discoveries_.erase(it);
        return;
    }
    if (it->second.attempts < params_.discovery_retries) {
        ++it->second.attempts;
        start_discovery(dest);
        return;
    }
    discoveries_.erase(it);
    auto buf = buffers_.find(dest);
    if (buf == buffers_.end()) return;
    for (const auto& d : buf->second) {
        Packet p;
        p.sender = self_;
        p.body = d;
        log(TraceKind::DropNoRoute, &p, dest);
    }
    buffers_.erase(buf);
}

void Router::handle_rreq(const Packet& packet, NodeId from) {
    const auto& r = packet.as<Rreq>();
    auto& fs = floods_[{r.src, r.bcast_id}];
    ++fs.copies;
    const bool randomize = params_.randomized_forwarding && !(profile_ && profile_->rushes()) && r.src != self_;
    if (randomize && (fs.collecting || fs.copies == 1)) {
        fs.collected.emplace_back(packet, from);
        if (fs.copies == 1) {
            fs.collecting = true;
            const auto key = std::make_pair(r.src, r.bcast_id);
            // Honest copies reach the destination one relay window behind a rusher's.
            const SimTime window = r.dest == self_ ? 2 * params_.collect_window : params_.collect_window;
            sim_.schedule_in(window, self_, [this, key] {
                auto& st = floods_[key];
                st.collecting = false;
                // Uniform among the copies with the fewest hops.
                std::vector<std::size_t> shortest;
                for (std::size_t i = 0; i < st.collected.size(); ++i) {
                    const auto h = st.collected[i].first.as<Rreq>().hop_count;
                    if (!shortest.empty() && h < st.collected[shortest.front()].first.as<Rreq>().hop_count) shortest.clear();
                    if (shortest.empty() || h == st.collected[shortest.front()].first.as<Rreq>().hop_count) shortest.push_back(i);
                }
                auto& rng = sim_.rng(self_, StreamPurpose::Jitter);
                const auto pick = shortest[rng.uniform_int(0, shortest.size() - 1)];
                auto chosen = std::move(st.collected[pick]);
                for (std::size_t i = 0; i < st.collected.size(); ++i) {
                    if (i != pick) log(TraceKind::DropDuplicate, &st.collected[i].first, st.collected[i].second);
                }
                st.collected.clear();
                process_rreq(chosen.first, chosen.second);
            });
        }
        return;
    }
    if (fs.copies > 1) {
        log(TraceKind::DropDuplicate, &packet, from);
        return;
    }
    process_rreq(packet, from);
}

void Router::process_rreq(const Packet& packet, NodeId from) {
    const auto& r = packet.as<Rreq>();
    const SimTime now = sim_.now();
    RouteEntry rev;
    rev.dest = r.src;
    rev.next_hop = from;
    rev.hop_count = r.hop_count + 1;
    rev.dest_seq = r.src_seq;
    rev.seq_valid = true;
    rev.expires = now + params_.active_route_timeout;
    table_.offer(rev, now);
    if (from != r.src) {
        RouteEntry nb;
        nb.dest = from;
        nb.next_hop = from;
        nb.hop_count = 1;
        nb.expires = now + params_.active_route_timeout;
        table_.offer(nb, now);
    }

    if (r.dest == self_) {
        reply_as_destination(r, from);
        return;
    }
    if (is_adversary(adversary::Kind::Blackhole)) {
        Packet p;
        p.sender = self_;
        p.body = adversary::blackhole_reply(*profile_, r, self_, params_.active_route_timeout);
        if (params_.protocol == Protocol::Saodv) {
            secure::saodv_extend(p, authority_->signing_key(self_), authority_->hasher(),
                                 sim_.rng(self_, StreamPurpose::Crypto), chain_length_, authority_->tag_bytes());
            p.as<Rrep>().hop_count = 1;
        }
        send(std::move(p), from, false);
        return;
    }
    const bool selfish = is_adversary(adversary::Kind::Selfish);
    if (params_.protocol == Protocol::Aodv && params_.intermediate_replies && !selfish) {
        const auto* e = table_.lookup(r.dest, now);
        if (e && e->seq_valid && e->dest_seq >= r.dest_seq_known && e->next_hop != from) {
            Rrep rp;
            rp.target = r.dest;
            rp.origin = r.src;
            rp.dest_seq = e->dest_seq;
            rp.hop_count = static_cast<std::uint8_t>(std::min(e->hop_count, 255));
            rp.lifetime = e->expires - now;
            rp.next_to_destination = e->next_hop;
            Packet p;
            p.sender = self_;
            p.body = rp;
            send(std::move(p), from, false);
            return;
        }
    }
    if (r.ttl <= 1) {
        log(TraceKind::DropTtl, &packet, from);
        return;
    }
    if (profile_ && !profile_->forwards_rreq()) {
        drop_adversary(packet);
        return;
    }
    Packet fwd = packet;
    auto& f = fwd.as<Rreq>();
    f.hop_count = static_cast<std::uint8_t>(f.hop_count + 1);
    f.ttl = static_cast<std::uint8_t>(f.ttl - 1);
    if (params_.header_extensions) f.next_to_source = from;
    if (params_.protocol == Protocol::Saodv) secure::saodv_advance(fwd, authority_->hasher());
    const SimTime delay = profile_ && profile_->rushes() ? SimTime(0) : jitter();
    const auto key = std::make_pair(r.src, r.bcast_id);
    sim_.schedule_in(delay, self_, [this, fwd = std::move(fwd), key]() mutable {
        if (params_.header_extensions) fwd.as<Rreq>().duplicate_flag = floods_[key].copies >= 2;
        send(std::move(fwd), NodeId::broadcast(), true);
    });
}

void Router::reply_as_destination(const Rreq& r, NodeId from) {
    own_seq_ = std::max(own_seq_, r.dest_seq_known) + 1;
    Rrep rp;
    rp.target = self_;
    rp.origin = r.src;
    rp.dest_seq = own_seq_;
    rp.hop_count = 0;
    rp.lifetime = params_.active_route_timeout;
    rp.next_to_destination = self_;
    Packet p;
    p.sender = self_;
    p.body = rp;
    if (params_.protocol == Protocol::Saodv) {
        secure::saodv_extend(p, authority_->signing_key(self_), authority_->hasher(), sim_.rng(self_, StreamPurpose::Crypto),
                             chain_length_, authority_->tag_bytes());
    }
    send(std::move(p), from, false);
}

void Router::handle_rrep(const Packet& packet, NodeId from) {
    const auto& rp = packet.as<Rrep>();
    const SimTime now = sim_.now();
    RouteEntry fw;
    fw.dest = rp.target;
    fw.next_hop = from;
    fw.hop_count = rp.hop_count + 1;
    fw.dest_seq = rp.dest_seq;
    fw.seq_valid = true;
    fw.expires = now + std::max(rp.lifetime, SimTime(1));
    table_.offer(fw, now);

    if (rp.origin == self_) {
        auto it = discoveries_.find(rp.target);
        if (it != discoveries_.end() && table_.lookup(rp.target, now)) {
            discoveries_.erase(it);
            if (on_route) on_route(self_, rp.target);
        }
        flush_buffer(rp.target);
        return;
    }
    auto* rev = table_.lookup(rp.origin, now);
    if (!rev) {
        log(TraceKind::DropNoRoute, &packet, rp.origin);
        return;
    }
    if (profile_ && !profile_->forwards_rrep()) {
        drop_adversary(packet);
        return;
    }
    rev->expires = std::max(rev->expires, now + params_.active_route_timeout);
    Packet fwd = packet;
    auto& f = fwd.as<Rrep>();
    f.hop_count = static_cast<std::uint8_t>(f.hop_count + 1);
    if (params_.header_extensions) f.next_to_destination = from;
    if (params_.protocol == Protocol::Saodv) secure::saodv_advance(fwd, authority_->hasher());
    send(std::move(fwd), rev->next_hop, true);
}

void Router::handle_rerr(const Packet& packet, NodeId from) {
    const auto& rerr = packet.as<Rerr>();
    std::vector<Unreachable> affected;
    for (const auto& u : rerr.unreachable) {
        auto* e = table_.find(u.dest);
        if (!e) continue;
        if (params_.protocol == Protocol::Aodv && (!e->seq_valid || u.dest_seq > e->dest_seq)) {
            e->dest_seq = u.dest_seq;
            e->seq_valid = true;
        }
        if (e->valid && e->next_hop == from) {
            e->valid = false;
            affected.push_back(u);
        }
    }
    if (!affected.empty()) send_rerr(std::move(affected));
}

void Router::send_rerr(std::vector<Unreachable> unreachable) {
    Rerr rerr;
    rerr.unreachable = std::move(unreachable);
    Packet p;
    p.sender = self_;
    p.body = std::move(rerr);
    send(std::move(p), NodeId::broadcast(), false);
}

void Router::fabricate_rerr() {
    Packet p;
    p.sender = profile_->spoof.valid() ? profile_->spoof : self_;
    p.body = adversary::fabricate_rerr(*profile_);
    send(std::move(p), NodeId::broadcast(), false, true);
}

// ---- data plane ----------------------------------------------------------------

void Router::send_data(const FlowSpec& flow, std::uint32_t seq) {
    Data d;
    d.flow_id = flow.id;
    d.src = self_;
    d.dest = flow.dest;
    d.seq = seq;
    d.created = sim_.now();
    d.size = flow.packet_size;
    Packet p;
    p.sender = self_;
    p.body = d;
    forward_data(p);
}

void Router::buffer(const Data& d) {
    auto& q = buffers_[d.dest];
    if (q.size() >= params_.buffer_limit) {
        Packet old;
        old.sender = self_;
        old.body = q.front();
        log(TraceKind::DropNoRoute, &old, d.dest);
        q.pop_front();
    }
    q.push_back(d);
    if (!discoveries_.count(d.dest)) originate_discovery(d.dest, true);
}

void Router::flush_buffer(NodeId dest) {
    auto it = buffers_.find(dest);
    if (it == buffers_.end()) return;
    auto pending = std::move(it->second);
    buffers_.erase(it);
    for (const auto& d : pending) {
        Packet p;
        p.sender = self_;
        p.body = d;
        forward_data(p);
    }
}

void Router::forward_data(const Packet& packet) {
    const auto& d = packet.as<Data>();
    if (d.dest == self_) {
        deliver(d);
        return;
    }
    const bool relaying = d.src != self_;
    if (relaying && profile_ && profile_->drop_data(sim_.rng(self_, StreamPurpose::Adversary))) {
        drop_adversary(packet);
        return;
    }
    auto* e = table_.lookup(d.dest, sim_.now());
    if (!e) {
        if (!relaying) {
            buffer(d);
            return;
        }
        log(TraceKind::DropNoRoute, &packet, d.dest);
        const auto* stale = table_.find(d.dest);
        send_rerr({Unreachable{d.dest, stale ? stale->dest_seq : 0}});
        return;
    }
    if (relaying && is_adversary(adversary::Kind::Wormhole) && e->next_hop == profile_->peer && !profile_->tunnel_data) {
        drop_adversary(packet);
        return;
    }
    e->expires = std::max(e->expires, sim_.now() + params_.active_route_timeout);
    Packet fwd = packet;
    send(std::move(fwd), e->next_hop, false);
}

void Router::send(Packet packet, NodeId next_hop, bool relay, bool keep_sender) {
    if (!keep_sender) packet.sender = self_;
    packet.uid = sim_.next_uid();
    if (is_control(packet)) {
        if (params_.protocol == Protocol::Seaodv && !keys_->protect(packet, next_hop)) {
            log(TraceKind::DropNoKey, &packet, next_hop);
            return;
        }
        if (params_.protocol == Protocol::Saodv && packet.is<Rerr>()) {
            secure::saodv_sign_rerr(packet, authority_->signing_key(self_), authority_->tag_bytes());
        }
        if (relay && profile_) adversary::control_mutation(*profile_, packet);
    }
    if (is_adversary(adversary::Kind::Wormhole) && next_hop == profile_->peer) {
        sim_.tunnel(self_, next_hop, std::move(packet), profile_->tunnel_delay);
        return;
    }
    sim_.transmit(self_, next_hop, std::move(packet));
}

}  // namespace meshsim::aodv
