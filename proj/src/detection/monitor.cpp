#include "meshsim/detection/monitor.hpp"

#include <algorithm>
#include <ostream>

namespace meshsim::detection {

using aodv::LmuKey;
using aodv::PacketType;

bool is_final(FsmState s) {
    return s == FsmState::TimeoutRreq || s == FsmState::Complete || s == FsmState::TimeoutRrep;
}

bool is_edge(FsmState from, FsmState to) {
    using S = FsmState;
    static const std::set<std::pair<S, S>> edges{
        {S::Init, S::UnexpectedRrep}, {S::Init, S::RcvdRreq},        {S::Init, S::FwdRreq},
        {S::RcvdRreq, S::RcvdRreq},   {S::RcvdRreq, S::FwdRreq},     {S::RcvdRreq, S::TimeoutRreq},
        {S::RcvdRreq, S::RcvdRrep},   {S::RcvdRreq, S::Complete},    {S::FwdRreq, S::FwdRreq},
        {S::FwdRreq, S::TimeoutRreq}, {S::FwdRreq, S::RcvdRrep},     {S::FwdRreq, S::Complete},
        {S::RcvdRrep, S::RcvdRrep},   {S::RcvdRrep, S::Complete},    {S::RcvdRrep, S::TimeoutRrep},
    };
    return edges.count({from, to}) > 0;
}

stats::ClassifyParams DetectionParams::classify_params() const {
    stats::ClassifyParams p;
    p.alpha = alpha;
    p.beta = beta;
    p.k_max = k_max;
    p.resamples = resamples;
    p.anova_seed = anova_seed;
    p.anova = anova;
    return p;
}

std::vector<std::string> DetectionParams::validate() const {
    std::vector<std::string> errors;
    if (window_period <= SimTime(0)) errors.push_back("detection window period W must be positive");
    if (window_multiple < 1) errors.push_back("detection window multiple d must be at least 1");
    if (!(alpha > 0.0 && alpha < 1.0)) errors.push_back("alpha must be in (0,1)");
    if (!(beta > 0.0 && beta < 1.0)) errors.push_back("beta must be in (0,1)");
    if (k_max < 2) errors.push_back("k_max must be at least 2");
    if (resamples < 1) errors.push_back("resamples must be positive");
    if (rreq_timeout <= SimTime(0) || rrep_timeout <= SimTime(0)) errors.push_back("LMU timeouts must be positive");
    return errors;
}

Monitor::Monitor(NodeId self, std::vector<NodeId> neighbors, DetectionParams params)
    : self_(self), neighbors_(std::move(neighbors)), params_(params) {
    std::sort(neighbors_.begin(), neighbors_.end());
    neighbors_.erase(std::unique(neighbors_.begin(), neighbors_.end()), neighbors_.end());
    std::erase(neighbors_, self_);
    watched_.insert(neighbors_.begin(), neighbors_.end());
}

FsmState Monitor::state(NodeId neighbor, LmuKey key) const {
    auto it = open_.find({neighbor, key});
    return it == open_.end() ? FsmState::Init : it->second.state;
}

void Monitor::move(NodeId neighbor, LmuKey key, Lmu& lmu, FsmState to, SimTime at) {
    lmu.path.push_back(Transition{at, lmu.state, to});
    lmu.state = to;
    switch (to) {
        case FsmState::RcvdRreq:
        case FsmState::FwdRreq: lmu.deadline = at + params_.rreq_timeout; break;
        case FsmState::RcvdRrep:
        case FsmState::UnexpectedRrep: lmu.deadline = at + params_.rrep_timeout; break;
        default: break;
    }
    if (is_final(to)) close(neighbor, key);
}

void Monitor::close(NodeId neighbor, LmuKey key) {
    auto it = open_.find({neighbor, key});
    if (it == open_.end()) return;
    auto& h = history_[neighbor];
    h.insert(h.end(), it->second.path.begin(), it->second.path.end());
    open_.erase(it);
}

void Monitor::apply(NodeId neighbor, LmuKey key, Event ev, SimTime at) {
    using S = FsmState;
    auto& lmu = open_[{neighbor, key}];
    const S s = lmu.state;
    std::optional<S> to;
    switch (ev) {
        case Event::MonitorRreq:
            if (s == S::Init || s == S::RcvdRreq) to = S::RcvdRreq;
            else if (s == S::FwdRreq) to = S::FwdRreq;
            break;
        case Event::NeighborRreq:
            if (s == S::Init || s == S::RcvdRreq || s == S::FwdRreq) to = S::FwdRreq;
            break;
        case Event::NeighborGetsRrep:
            if (s == S::Init) to = S::UnexpectedRrep;
            else if (s == S::RcvdRreq || s == S::FwdRreq || s == S::RcvdRrep) to = S::RcvdRrep;
            break;
        case Event::NeighborSendsRrep:
            if (s == S::Init) to = S::UnexpectedRrep;
            else if (s == S::RcvdRreq || s == S::FwdRreq || s == S::RcvdRrep) to = S::Complete;
            break;
    }
    if (to) move(neighbor, key, lmu, *to, at);
    else if (lmu.path.empty()) open_.erase({neighbor, key});
}

void Monitor::advance(SimTime now) {
    for (auto it = open_.begin(); it != open_.end();) {
        auto& [id, lmu] = *it;
        if (lmu.deadline > now) {
            ++it;
            continue;
        }
        const auto [neighbor, key] = id;
        ++it;
        switch (lmu.state) {
            case FsmState::RcvdRreq:
            case FsmState::FwdRreq: move(neighbor, key, lmu, FsmState::TimeoutRreq, lmu.deadline); break;
            case FsmState::RcvdRrep: move(neighbor, key, lmu, FsmState::TimeoutRrep, lmu.deadline); break;
            default:
                ++discarded_unexpected_;
                open_.erase({neighbor, key});
                break;
        }
    }
}

void Monitor::observe(const Observation& obs) {
    advance(obs.time - SimTime(1));
    if (obs.type == PacketType::Rreq) {
        if (obs.transmitter == self_) {
            for (NodeId n : neighbors_) apply(n, obs.key, Event::MonitorRreq, obs.time);
            return;
        }
        if (watches(obs.transmitter)) apply(obs.transmitter, obs.key, Event::NeighborRreq, obs.time);
        const NodeId nts = obs.next_to_source;
        if (params_.header_extensions && nts.valid() && nts != obs.transmitter && nts != self_ && watches(nts)) {
            const auto s = state(nts, obs.key);
            if (s == FsmState::Init || s == FsmState::RcvdRreq) apply(nts, obs.key, Event::NeighborRreq, obs.time);
        }
        return;
    }
    if (obs.type != PacketType::Rrep) return;
    if (obs.transmitter != self_ && watches(obs.transmitter)) {
        apply(obs.transmitter, obs.key, Event::NeighborSendsRrep, obs.time);
    }
    if (obs.addressee.valid() && obs.addressee != self_ && watches(obs.addressee)) {
        apply(obs.addressee, obs.key, Event::NeighborGetsRrep, obs.time);
    }
}

Snapshot Monitor::snapshot(SimTime now) const {
    Snapshot snap;
    const SimTime from = now - params_.window();
    for (NodeId n : neighbors_) {
        stats::CountMatrix m(kStates);
        if (auto it = history_.find(n); it != history_.end()) {
            for (const auto& t : it->second) {
                if (t.time > from && t.time <= now) {
                    ++m.at(static_cast<int>(t.from) - 1, static_cast<int>(t.to) - 1);
                }
            }
        }
        if (m.total() == 0) {
            snap.insufficient.push_back(n);
        } else {
            snap.neighbors.push_back(n);
            snap.matrices.push_back(std::move(m));
        }
    }
    return snap;
}

std::optional<Observation> observation_of(const engine::Frame& frame) {
    if (!frame.packet) return std::nullopt;
    const auto key = frame.packet->lmu();
    if (!key) return std::nullopt;
    Observation o;
    o.time = frame.time;
    o.transmitter = frame.transmitter;
    o.addressee = frame.addressee;
    o.type = frame.packet->type();
    o.key = *key;
    if (const auto* q = std::get_if<aodv::Rreq>(&frame.packet->body)) o.next_to_source = q->next_to_source;
    return o;
}

ReplayInput replay_input(const engine::TraceLog& trace) {
    ReplayInput in;
    std::map<NodeId, std::set<NodeId>> heard;
    // (transmitter, type, key) -> addressee of the latest tx row
    std::map<std::tuple<NodeId, PacketType, std::int64_t>, NodeId> last_tx;
    for (const auto& r : trace.records()) {
        in.end = std::max(in.end, r.time);
        if (r.kind == engine::TraceKind::Rx || r.kind == engine::TraceKind::Overhear) {
            if (r.src.valid() && r.dst.valid()) {
                heard[r.dst].insert(r.src);
                heard[r.src].insert(r.dst);
            }
        }
        if (!r.type || (*r.type != PacketType::Rreq && *r.type != PacketType::Rrep) || r.flow_id < 0) continue;
        Observation o;
        o.time = r.time;
        o.type = *r.type;
        o.key = LmuKey::from_code(r.flow_id);
        o.transmitter = r.src;
        if (r.kind == engine::TraceKind::Tx) {
            o.addressee = r.dst;
            last_tx[{r.src, *r.type, r.flow_id}] = r.dst;
            in.observations[r.src].push_back(o);
        } else if (r.kind == engine::TraceKind::Rx) {
            o.addressee = *r.type == PacketType::Rreq ? NodeId::broadcast() : r.dst;
            in.observations[r.dst].push_back(o);
        } else if (r.kind == engine::TraceKind::Overhear) {
            auto it = last_tx.find({r.src, *r.type, r.flow_id});
            o.addressee = it == last_tx.end() ? NodeId::broadcast() : it->second;
            in.observations[r.dst].push_back(o);
        }
    }
    for (auto& [n, s] : heard) in.neighbors[n] = std::vector<NodeId>(s.begin(), s.end());
    for (auto& [n, obs] : in.observations) in.neighbors.try_emplace(n);
    return in;
}

MonitorRound classify_round(const Monitor& monitor, SimTime now) {
    MonitorRound round;
    round.monitor = monitor.self();
    auto snap = monitor.snapshot(now);
    round.neighbors = snap.neighbors;
    round.classification = stats::classify(snap.matrices, monitor.params().classify_params());
    return round;
}

std::vector<Verdict> majority_vote(const std::vector<MonitorRound>& rounds) {
    std::map<NodeId, Verdict> votes;
    for (const auto& r : rounds) {
        for (std::size_t i = 0; i < r.neighbors.size(); ++i) {
            auto& v = votes[r.neighbors[i]];
            v.node = r.neighbors[i];
            const auto label = i < r.classification.labels.size() ? r.classification.labels[i] : stats::Label::Unknown;
            if (label == stats::Label::Selfish) ++v.selfish_votes;
            else if (label == stats::Label::Cooperative) ++v.cooperative_votes;
            else ++v.unknown_votes;
        }
    }
    std::vector<Verdict> out;
    for (auto& [n, v] : votes) {
        v.selfish = v.selfish_votes > v.cooperative_votes;
        out.push_back(v);
    }
    return out;
}

void write_classification_csv(std::ostream& out, const std::vector<MonitorRound>& rounds) {
    out << "monitor,neighbor,label,C_r,P_k,k\n";
    for (const auto& r : rounds) {
        const auto& c = r.classification;
        for (std::size_t i = 0; i < r.neighbors.size(); ++i) {
            const auto label = i < c.labels.size() ? c.labels[i] : stats::Label::Unknown;
            const double score = i < c.scores.size() ? c.scores[i] : 0.0;
            out << r.monitor.value() << ',' << r.neighbors[i].value() << ',' << stats::to_string(label) << ','
                << score << ',' << c.p_k << ',' << c.k << '\n';
        }
    }
}

std::vector<MonitorRound> detect_offline(const engine::TraceLog& trace, const DetectionParams& params) {
    auto in = replay_input(trace);
    auto p = params;
    p.header_extensions = false;
    std::vector<MonitorRound> rounds;
    for (const auto& [node, neighbors] : in.neighbors) {
        Monitor m(node, neighbors, p);
        if (auto it = in.observations.find(node); it != in.observations.end()) {
            for (const auto& o : it->second) m.observe(o);
        }
        m.advance(in.end);
        rounds.push_back(classify_round(m, in.end));
    }
    return rounds;
}

}  // namespace meshsim::detection
