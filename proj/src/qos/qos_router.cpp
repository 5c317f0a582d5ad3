#include "meshsim/qos/qos_router.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace meshsim::qos {

using aodv::Data;
using aodv::Packet;
using aodv::Probe;
using aodv::Rerr;
using aodv::Rrep;
using aodv::Rreq;
using engine::RxMode;
using engine::TraceKind;

namespace {

bool is_control(const Packet& p) { return p.is<Rreq>() || p.is<Rrep>() || p.is<Rerr>(); }

std::ptrdiff_t position(const std::vector<NodeId>& route, NodeId n) {
    auto it = std::find(route.begin(), route.end(), n);
    return it == route.end() ? -1 : it - route.begin();
}

}  // namespace

QosRouter::QosRouter(engine::Simulator& sim, NodeId self, QosParams params, std::optional<adversary::AttackProfile> profile)
    : RoutingAgent(sim, self, std::move(profile)), params_(params) {}

SimTime QosRouter::jitter() {
    const auto lo = params_.jitter_lo.ticks();
    const auto hi = std::max(lo, params_.jitter_hi.ticks());
    auto& rng = sim_.rng(self_, StreamPurpose::Jitter);
    return SimTime(static_cast<std::int64_t>(rng.uniform_int(static_cast<std::uint64_t>(lo), static_cast<std::uint64_t>(hi))));
}

void QosRouter::start() {
    sim_.schedule_in(jitter(), self_, [this] {
        Packet hello;
        hello.sender = self_;
        aodv::Hello h;
        h.id = self_;
        hello.body = h;
        send(std::move(hello), NodeId::broadcast());
    });
    auto tick = std::make_shared<std::function<void()>>();
    *tick = [this, tick] {
        end_interval();
        sim_.schedule_in(params_.interval, self_, *tick);
    };
    sim_.schedule_in(params_.interval, self_, *tick);

    if (profile_ && profile_->kind == adversary::Kind::RreqFlood && profile_->rate > 0.0) {
        const SimTime interval = std::max(SimTime::seconds(1.0 / profile_->rate), SimTime(1));
        const NodeId bogus(sim_.topology().size() + 1);
        auto flood = std::make_shared<std::function<void()>>();
        *flood = [this, interval, bogus, flood] {
            if (sim_.now() >= profile_->stop) return;
            originate_discovery(bogus, true);
            sim_.schedule_in(interval, self_, *flood);
        };
        sim_.schedule_at(profile_->start, self_, engine::EventKind::Timer, *flood);
    }
}

// ---- reliability -----------------------------------------------------------------

std::optional<double> QosRouter::reliability(NodeId neighbor) const {
    auto it = r_.find(neighbor);
    if (it == r_.end()) return std::nullopt;
    return it->second;
}

bool QosRouter::gate(NodeId neighbor) const {
    if (excluded_.count(neighbor)) return false;
    return reliability_gate(reliability(neighbor), params_.gate);
}

void QosRouter::note_neighbor(NodeId n) {
    if (!n.valid() || n == self_) return;
    r_.try_emplace(n, excluded_.count(n) ? 0.0 : 1.0);
}

void QosRouter::end_interval() {
    for (auto& [n, w] : window_) {
        if (w.second == 0 || excluded_.count(n)) continue;
        r_[n] = update_reliability(r_[n], static_cast<double>(w.first) / w.second, params_.alpha);
    }
    window_.clear();
}

bool QosRouter::in_scope(NodeId src, NodeId dest) const {
    if (!params_.selective_flooding) return true;
    const auto& t = sim_.topology();
    if (!src.valid() || !dest.valid() || src.value() >= t.size() || dest.value() >= t.size()) return true;
    const int g = t.mesh_group(self_);
    return g == t.mesh_group(src) || g == t.mesh_group(dest);
}

void QosRouter::expect_rebroadcast(std::pair<NodeId, std::uint32_t> key, NodeId dest, int ttl_out) {
    if (ttl_out <= 1) return;
    sim_.schedule_in(params_.expect_grace, self_, [this, key, dest] {
        const auto& t = sim_.topology();
        const auto& fl = floods_[key];
        for (const auto& [n, r] : r_) {
            if (n == dest || excluded_.count(n)) continue;
            if (params_.selective_flooding && dest.valid() && dest.value() < t.size()) {
                const int g = t.mesh_group(n);
                if (g != t.mesh_group(key.first) && g != t.mesh_group(dest)) continue;
            }
            auto& w = window_[n];
            ++w.second;
            if (fl.transmitted.count(n)) ++w.first;
        }
    });
}

void QosRouter::apply_detection(const std::map<NodeId, bool>& selfish) {
    for (const auto& [n, bad] : selfish) {
        if (bad) {
            excluded_.insert(n);
            r_[n] = 0.0;
        } else {
            excluded_.erase(n);
        }
    }
}

// ---- receive ----------------------------------------------------------------------

void QosRouter::receive(const Packet& packet, NodeId transmitter, RxMode mode) {
    note_neighbor(transmitter);
    if (packet.is<Rreq>() && mode != RxMode::Tunnel) {
        const auto& r = packet.as<Rreq>();
        floods_[{r.src, r.bcast_id}].transmitted.insert(transmitter);
    }
    if (mode == RxMode::Overhear || packet.is<aodv::Hello>()) return;
    if (is_control(packet) && mode != RxMode::Tunnel && !gate(transmitter)) {
        log(TraceKind::DropGate, &packet, transmitter);
        return;
    }
    if (packet.is<Rreq>()) {
        handle_rreq(packet, transmitter);
    } else if (packet.is<Rrep>()) {
        handle_rrep(packet, transmitter);
    } else if (packet.is<Rerr>()) {
        handle_rerr(packet, transmitter);
    } else if (packet.is<Probe>()) {
        handle_probe(packet, transmitter);
    } else if (packet.is<Data>()) {
        handle_data(packet, transmitter);
    }
}

void QosRouter::radio_loss(const Packet& packet, NodeId transmitter) {
    if (packet.is<Data>()) links_[transmitter].congestion.flag_failure();
}

// ---- discovery --------------------------------------------------------------------

void QosRouter::originate_discovery(NodeId dest, bool) {
    if (dest == self_) return;
    ++own_seq_;
    ++bcast_id_;
    Rreq r;
    r.src = self_;
    r.src_seq = own_seq_;
    r.bcast_id = bcast_id_;
    r.dest = dest;
    r.ttl = static_cast<std::uint8_t>(std::clamp(params_.ttl, 1, 255));
    r.next_to_source = self_;
    r.route = {self_};
    auto& fl = floods_[{self_, bcast_id_}];
    fl.copies = 1;
    Packet p;
    p.body = r;
    ++originated_rreqs_;
    send(std::move(p), NodeId::broadcast());
    expect_rebroadcast({self_, bcast_id_}, dest, r.ttl);
}

void QosRouter::handle_rreq(const Packet& p, NodeId from) {
    const auto& r = p.as<Rreq>();
    const auto key = std::make_pair(r.src, r.bcast_id);
    auto& fl = floods_[key];
    ++fl.copies;
    if (r.src == self_) {
        log(TraceKind::DropDuplicate, &p, from);
        return;
    }
    if (!in_scope(r.src, r.dest)) {
        log(TraceKind::DropScope, &p, from);
        return;
    }
    if (r.dest == self_) {
        if (fl.replies >= params_.candidate_cap) {
            log(TraceKind::DropDuplicate, &p, from);
            return;
        }
        ++fl.replies;
        Rrep rp;
        rp.target = self_;
        rp.origin = r.src;
        rp.dest_seq = ++own_seq_;
        rp.lifetime = params_.reservation_timeout;
        rp.next_to_destination = self_;
        rp.flags = aodv::kRrepCandidate;
        rp.attempt = r.bcast_id;
        rp.route = r.route;
        rp.route.push_back(self_);
        Packet out;
        out.body = rp;
        forward_along(std::move(out), rp.route, true, false);
        return;
    }
    if (fl.copies > 1) {
        log(TraceKind::DropDuplicate, &p, from);
        return;
    }
    if (profile_ && profile_->kind == adversary::Kind::Blackhole) {
        Rrep rp = adversary::blackhole_reply(*profile_, r, self_, params_.reservation_timeout);
        rp.flags = aodv::kRrepCandidate;
        rp.attempt = r.bcast_id;
        rp.route = r.route;
        rp.route.push_back(self_);
        rp.route.push_back(r.dest);
        Packet out;
        out.body = rp;
        forward_along(std::move(out), rp.route, true, false);
        return;
    }
    if (r.ttl <= 1) {
        log(TraceKind::DropTtl, &p, from);
        return;
    }
    if (profile_ && !profile_->forwards_rreq()) {
        drop_adversary(p);
        return;
    }
    Packet fwd = p;
    auto& f = fwd.as<Rreq>();
    f.hop_count = static_cast<std::uint8_t>(f.hop_count + 1);
    f.ttl = static_cast<std::uint8_t>(f.ttl - 1);
    f.next_to_source = from;
    f.route.push_back(self_);
    const SimTime delay = profile_ && profile_->rushes() ? SimTime(0) : jitter();
    sim_.schedule_in(delay, self_, [this, fwd = std::move(fwd), key]() mutable {
        auto& q = fwd.as<Rreq>();
        q.duplicate_flag = floods_[key].copies >= 2;
        const NodeId dest = q.dest;
        const int ttl = q.ttl;
        send(std::move(fwd), NodeId::broadcast(), true);
        expect_rebroadcast(key, dest, ttl);
    });
}

void QosRouter::handle_rrep(const Packet& p, NodeId from) {
    Packet in = p;
    auto& rp = in.as<Rrep>();
    rp.reliability_milli += static_cast<std::uint32_t>(std::lround(reliability(from).value_or(0.0) * 1000.0));

    if (rp.flags & aodv::kRrepReroute) {
        const auto key = std::make_tuple(rp.target, rp.flow_id, rp.attempt);
        if (reroute_seen_.count(key)) {
            log(TraceKind::DropDuplicate, &p, from);
            return;
        }
        reroute_seen_[key] = true;
        if (rp.origin == self_) {
            auto it = flows_.find(rp.flow_id);
            if (it == flows_.end() || it->second.phase != Phase::Admitted || it->second.rerouting) return;
            std::vector<NodeId> path{self_};
            path.insert(path.end(), rp.route.rbegin(), rp.route.rend());
            if (path == it->second.path) return;
            it->second.rerouting = true;
            it->second.candidates.push_front(std::move(path));
            probe_next(rp.flow_id);
            return;
        }
        if (!in_scope(rp.origin, rp.target)) {
            log(TraceKind::DropScope, &p, from);
            return;
        }
        if (rp.hop_count + 1 >= params_.ttl) {
            log(TraceKind::DropTtl, &p, from);
            return;
        }
        if (profile_ && !profile_->forwards_rrep()) {
            drop_adversary(p);
            return;
        }
        rp.hop_count = static_cast<std::uint8_t>(rp.hop_count + 1);
        rp.route.push_back(self_);
        const SimTime delay = profile_ && profile_->rushes() ? SimTime(0) : jitter();
        sim_.schedule_in(delay, self_, [this, in = std::move(in)]() mutable { send(std::move(in), NodeId::broadcast(), true); });
        return;
    }

    if (rp.origin == self_) {
        if (rp.flags & aodv::kRrepProbeReport) {
            finish_probe(rp.flow_id, rp.attempt, static_cast<double>(rp.probe_delay_us));
            return;
        }
        for (auto& [id, f] : flows_) {
            if (f.spec.dest != rp.target || f.attempt != rp.attempt) continue;
            if (f.phase != Phase::Discovering && f.phase != Phase::Probing) continue;
            const int hops = static_cast<int>(rp.route.size()) - 1;
            const double score = hops > 0 ? rp.reliability_milli / 1000.0 / hops : 0.0;
            if (score <= params_.gate) continue;
            on_candidate(f, rp.route);
        }
        return;
    }
    if (profile_ && !profile_->forwards_rrep()) {
        drop_adversary(p);
        return;
    }
    rp.hop_count = static_cast<std::uint8_t>(rp.hop_count + 1);
    rp.next_to_destination = from;
    const auto route = rp.route;
    forward_along(std::move(in), route, true, true);
}

void QosRouter::handle_rerr(const Packet& p, NodeId) {
    const auto& e = p.as<Rerr>();
    if (e.notify == self_) {
        auto it = flows_.find(e.flow_id);
        if (it == flows_.end()) return;
        auto& f = it->second;
        if (f.phase == Phase::Discovering || f.phase == Phase::Probing) return;
        f.path.clear();
        f.rerouting = false;
        f.phase = Phase::Idle;
        start_discovery(e.flow_id);
        return;
    }
    if (!e.notify.valid()) return;
    if (profile_ && !profile_->forwards_rrep() && profile_->kind == adversary::Kind::Selfish) {
        drop_adversary(p);
        return;
    }
    const auto route = e.route;
    forward_along(p, route, true, true);
}

// ---- source side ------------------------------------------------------------------

void QosRouter::start_discovery(std::int32_t flow) {
    auto& f = flows_.at(flow);
    f.phase = Phase::Discovering;
    f.candidates.clear();
    f.probing.clear();
    originate_discovery(f.spec.dest, true);
    f.attempt = bcast_id_;
    const std::uint64_t gen = ++f.timer_gen;
    sim_.schedule_in(params_.discovery_wait, self_, [this, flow, gen] {
        auto& fl = flows_.at(flow);
        if (fl.timer_gen == gen && fl.phase == Phase::Discovering) reject(flow);
    });
}

void QosRouter::on_candidate(SourceFlow& f, std::vector<NodeId> path) {
    if (path.size() < 2 || path.front() != self_) return;
    f.candidates.push_back(std::move(path));
    if (f.phase == Phase::Discovering) {
        f.phase = Phase::Probing;
        probe_next(f.spec.id);
    }
}

void QosRouter::probe_next(std::int32_t flow) {
    auto& f = flows_.at(flow);
    if (f.candidates.empty()) {
        if (f.rerouting) {
            f.rerouting = false;
            f.probing.clear();
            return;
        }
        reject(flow);
        return;
    }
    f.probing = std::move(f.candidates.front());
    f.candidates.pop_front();
    const std::uint32_t round = ++f.probe_round;
    const int hops = static_cast<int>(f.probing.size()) - 1;
    const int total = 2 * hops;
    const SimTime spacing = std::max(SimTime::seconds(1.0 / std::max(f.spec.rate, 1e-6)), SimTime(1));
    const auto path = f.probing;
    for (int i = 0; i < total; ++i) {
        sim_.schedule_in(spacing * i, self_, [this, flow, round, i, total, path] {
            const auto& fl = flows_.at(flow);
            if (fl.probe_round != round || fl.probing.empty()) return;
            Probe pr;
            pr.flow_id = flow;
            pr.src = self_;
            pr.dest = fl.spec.dest;
            pr.index = static_cast<std::uint16_t>(i);
            pr.total = static_cast<std::uint16_t>(total);
            pr.attempt = round;
            pr.sent_at = sim_.now();
            pr.size = fl.spec.packet_size;
            pr.route = path;
            Packet p;
            p.body = std::move(pr);
            ++probes_sent_;
            send(std::move(p), path[1]);
        });
    }
    const auto hop_delay = sim_.topology().hop_delay();
    const SimTime wait = spacing * (total - 1) +
                         SimTime(static_cast<std::int64_t>(std::ceil(params_.probe_timer_factor * hops * hop_delay.ticks())));
    sim_.schedule_in(wait, self_, [this, flow, round] { finish_probe(flow, round, std::nullopt); });
}

void QosRouter::finish_probe(std::int32_t flow, std::uint32_t round, std::optional<double> avg_delay_us) {
    auto it = flows_.find(flow);
    if (it == flows_.end()) return;
    auto& f = it->second;
    if (f.probe_round != round || f.probing.empty()) return;
    if (avg_delay_us && *avg_delay_us <= static_cast<double>(f.spec.t_max.ticks())) {
        admit(f, std::move(f.probing));
        return;
    }
    f.probing.clear();
    probe_next(flow);
}

void QosRouter::admit(SourceFlow& f, std::vector<NodeId> path) {
    f.path = std::move(path);
    f.probing.clear();
    f.candidates.clear();
    f.phase = Phase::Admitted;
    f.rerouting = false;
    ++f.timer_gen;
    ++admissions_;
    if (on_route) on_route(self_, f.spec.dest);
    auto pending = std::move(f.buffer);
    f.buffer.clear();
    for (auto& d : pending) {
        d.route = f.path;
        send_data_packet(std::move(d), f.path[1]);
    }
}

void QosRouter::reject(std::int32_t flow) {
    auto& f = flows_.at(flow);
    ++rejections_;
    f.phase = Phase::Idle;
    f.probing.clear();
    f.candidates.clear();
    const std::uint64_t gen = ++f.timer_gen;
    sim_.schedule_in(params_.retry_after, self_, [this, flow, gen] {
        auto& fl = flows_.at(flow);
        if (fl.timer_gen == gen && fl.phase == Phase::Idle) start_discovery(flow);
    });
}

std::optional<std::vector<NodeId>> QosRouter::admitted_path(std::int32_t flow) const {
    auto it = flows_.find(flow);
    if (it == flows_.end() || it->second.phase != Phase::Admitted) return std::nullopt;
    return it->second.path;
}

std::optional<NodeId> QosRouter::next_hop(NodeId dest) {
    for (const auto& [id, f] : flows_) {
        if (f.spec.dest == dest && f.phase == Phase::Admitted && f.path.size() >= 2) return f.path[1];
    }
    std::optional<NodeId> best;
    SimTime latest(-1);
    for (const auto& [id, e] : flow_table_) {
        if (e.dest == dest && e.expires > sim_.now() && e.expires > latest) {
            latest = e.expires;
            best = e.next_hop;
        }
    }
    return best;
}

// ---- data plane -------------------------------------------------------------------

void QosRouter::send_data(const aodv::FlowSpec& flow, std::uint32_t seq) {
    auto [it, fresh] = flows_.try_emplace(flow.id);
    auto& f = it->second;
    if (fresh) f.spec = flow;
    contracts_[flow.id] = flow;
    Data d;
    d.flow_id = flow.id;
    d.src = self_;
    d.dest = flow.dest;
    d.seq = seq;
    d.created = sim_.now();
    d.size = flow.packet_size;
    if (f.phase == Phase::Admitted) {
        d.route = f.path;
        send_data_packet(std::move(d), f.path[1]);
        return;
    }
    if (f.buffer.size() >= params_.buffer_limit) {
        Packet old;
        old.body = f.buffer.front();
        log(TraceKind::DropNoRoute, &old, flow.dest);
        f.buffer.pop_front();
    }
    f.buffer.push_back(std::move(d));
    // After a rejection the retry timer restarts discovery.
    if (f.phase == Phase::Idle && f.timer_gen == 0) start_discovery(flow.id);
}

void QosRouter::send_data_packet(Data d, NodeId next_hop) {
    d.link_seq = ++link_seq_out_[next_hop];
    d.hop_sent_at = sim_.now();
    Packet p;
    p.body = std::move(d);
    send(std::move(p), next_hop);
}

void QosRouter::install_flow(std::int32_t flow, NodeId dest, NodeId next_hop) {
    flow_table_[flow] = FlowEntry{next_hop, dest, sim_.now() + params_.reservation_timeout};
}

void QosRouter::handle_probe(const Packet& p, NodeId) {
    const auto& pr = p.as<Probe>();
    if (pr.dest == self_) {
        auto& df = dest_flows_[pr.flow_id];
        if (df.reported.count(pr.attempt)) return;
        df.probe_delays[pr.attempt].push_back(static_cast<double>((sim_.now() - pr.sent_at).ticks()));
        if (pr.index + 1 == pr.total) {
            send_report(pr.flow_id, pr.attempt, pr.route);
            return;
        }
        const std::uint64_t gen = ++df.report_gen[pr.attempt];
        const int hops = static_cast<int>(pr.route.size()) - 1;
        SimTime wait(static_cast<std::int64_t>(
            std::ceil(params_.probe_timer_factor * hops * sim_.topology().hop_delay().ticks())));
        if (auto c = contracts_.find(pr.flow_id); c != contracts_.end() && c->second.rate > 0.0) {
            wait += SimTime::seconds(1.0 / c->second.rate) * (pr.total - 1 - pr.index);
        }
        const auto flow = pr.flow_id;
        const auto round = pr.attempt;
        const auto route = pr.route;
        sim_.schedule_in(wait, self_, [this, flow, round, route, gen] {
            auto& d = dest_flows_[flow];
            if (d.report_gen[round] == gen && !d.reported.count(round)) send_report(flow, round, route);
        });
        return;
    }
    if (profile_ && pr.src != self_ && profile_->drop_data(sim_.rng(self_, StreamPurpose::Adversary))) {
        drop_adversary(p);
        return;
    }
    const auto idx = position(pr.route, self_);
    if (idx < 0 || idx + 1 >= static_cast<std::ptrdiff_t>(pr.route.size())) {
        log(TraceKind::DropNoRoute, &p, pr.dest);
        return;
    }
    install_flow(pr.flow_id, pr.dest, pr.route[static_cast<std::size_t>(idx + 1)]);
    forward_along(p, pr.route, false, false);
}

void QosRouter::send_report(std::int32_t flow, std::uint32_t round, std::vector<NodeId> route) {
    auto& df = dest_flows_[flow];
    df.reported.insert(round);
    const auto& delays = df.probe_delays[round];
    double avg = 0.0;
    for (double x : delays) avg += x;
    if (!delays.empty()) avg /= static_cast<double>(delays.size());
    df.probe_delays.erase(round);
    Rrep rp;
    rp.target = self_;
    rp.origin = route.front();
    rp.flags = aodv::kRrepProbeReport;
    rp.flow_id = flow;
    rp.attempt = round;
    rp.probe_delay_us = static_cast<std::int64_t>(std::llround(avg));
    rp.next_to_destination = self_;
    rp.route = std::move(route);
    Packet p;
    p.body = rp;
    const auto r = p.as<Rrep>().route;
    forward_along(std::move(p), r, true, false);
}

void QosRouter::handle_data(const Packet& p, NodeId from) {
    const auto& d = p.as<Data>();
    auto& link = links_[from];
    link.congestion.receive(d.link_seq);
    link.rtts.push_back(2.0 * (sim_.now() - d.hop_sent_at).to_seconds());
    while (link.rtts.size() > params_.bandwidth_window) link.rtts.pop_front();
    ++link.since_check;

    if (d.dest == self_) {
        deliver(d);
        check_delay(d, sim_.now() - d.created);
        check_bandwidth(from, d);
        return;
    }
    check_bandwidth(from, d);
    if (profile_ && d.src != self_ && profile_->drop_data(sim_.rng(self_, StreamPurpose::Adversary))) {
        drop_adversary(p);
        return;
    }
    auto it = flow_table_.find(d.flow_id);
    if (it == flow_table_.end() || it->second.expires <= sim_.now()) {
        log(TraceKind::DropNoRoute, &p, d.dest);
        const auto idx = position(d.route, self_);
        std::vector<NodeId> back(d.route.begin(), idx >= 0 ? d.route.begin() + idx + 1 : d.route.begin());
        if (back.empty()) back = {d.src, self_};
        send_rerr_to_source(d.flow_id, d.src, std::move(back), aodv::RerrReason::FlowMiss);
        return;
    }
    it->second.expires = sim_.now() + params_.reservation_timeout;
    Data fwd = d;
    send_data_packet(std::move(fwd), it->second.next_hop);
}

void QosRouter::check_delay(const Data& d, SimTime latency) {
    auto c = contracts_.find(d.flow_id);
    if (c == contracts_.end()) return;
    auto& df = dest_flows_[d.flow_id];
    df.recent_delays.push_back(static_cast<double>(latency.ticks()));
    while (df.recent_delays.size() > params_.delay_window) df.recent_delays.pop_front();
    if (df.recent_delays.size() < params_.delay_window) return;
    double mean = 0.0;
    for (double x : df.recent_delays) mean += x;
    mean /= static_cast<double>(df.recent_delays.size());
    if (mean <= static_cast<double>(c->second.t_max.ticks())) return;
    if (df.last_reroute >= SimTime(0) && sim_.now() - df.last_reroute < params_.violation_holdoff) return;
    df.last_reroute = sim_.now();
    df.recent_delays.clear();
    Rrep rp;
    rp.target = self_;
    rp.origin = d.src;
    rp.flags = aodv::kRrepReroute;
    rp.flow_id = d.flow_id;
    rp.attempt = ++df.reroute_counter;
    rp.dest_seq = ++own_seq_;
    rp.next_to_destination = self_;
    rp.route = {self_};
    reroute_seen_[std::make_tuple(self_, d.flow_id, rp.attempt)] = true;
    Packet p;
    p.body = rp;
    send(std::move(p), NodeId::broadcast());
}

void QosRouter::check_bandwidth(NodeId from, const Data& d) {
    auto c = contracts_.find(d.flow_id);
    if (c == contracts_.end()) return;
    auto& link = links_[from];
    if (link.since_check < params_.bandwidth_window) return;
    link.since_check = 0;
    const auto p = link.congestion.p_congestion();
    if (!p) return;
    const std::vector<double> samples(link.rtts.begin(), link.rtts.end());
    const auto stats = rtt_stats(samples);
    const double estrat = estimate_bandwidth(static_cast<double>(d.size), stats.mean, rto(stats.mean, stats.mad), *p,
                                             params_.capacity_Bps);
    if (estrat >= c->second.b_min) return;
    if (link.last_report >= SimTime(0) && sim_.now() - link.last_report < params_.violation_holdoff) return;
    link.last_report = sim_.now();
    const auto idx = position(d.route, self_);
    std::vector<NodeId> back(d.route.begin(), idx >= 0 ? d.route.begin() + idx + 1 : d.route.begin());
    if (back.size() < 2) return;
    send_rerr_to_source(d.flow_id, d.src, std::move(back), aodv::RerrReason::Bandwidth);
}

void QosRouter::send_rerr_to_source(std::int32_t flow, NodeId source, std::vector<NodeId> back_route, aodv::RerrReason reason) {
    if (source == self_) return;
    Rerr e;
    e.notify = source;
    e.flow_id = flow;
    e.reason = reason;
    e.route = std::move(back_route);
    auto it = contracts_.find(flow);
    if (it != contracts_.end()) e.unreachable.push_back({it->second.dest, 0});
    Packet p;
    p.body = e;
    const auto route = p.as<Rerr>().route;
    forward_along(std::move(p), route, true, false);
}

void QosRouter::forward_along(Packet p, const std::vector<NodeId>& route, bool reverse, bool relay) {
    const auto idx = position(route, self_);
    const auto next = reverse ? idx - 1 : idx + 1;
    if (idx < 0 || next < 0 || next >= static_cast<std::ptrdiff_t>(route.size())) {
        log(TraceKind::DropNoRoute, &p);
        return;
    }
    send(std::move(p), route[static_cast<std::size_t>(next)], relay);
}

void QosRouter::send(Packet p, NodeId next_hop, bool relay) {
    p.sender = self_;
    p.uid = sim_.next_uid();
    if (relay && profile_ && is_control(p)) adversary::control_mutation(*profile_, p);
    sim_.transmit(self_, next_hop, std::move(p));
}

}  // namespace meshsim::qos
