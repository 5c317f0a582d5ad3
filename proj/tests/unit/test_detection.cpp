#include <doctest.h>

#include <sstream>

#include "meshsim/detection/monitor.hpp"
#include "unit/net_fixture.hpp"

using namespace meshsim;
using namespace meshsim::detection;
using aodv::LmuKey;
using aodv::PacketType;
using S = FsmState;

namespace {

const NodeId N(0), X(1), Y(2), Z(3), Src(9), Dst(8);
const LmuKey kKey{Src, Dst};

Observation obs(double ms, NodeId tx, PacketType type, NodeId to = NodeId::broadcast()) {
    Observation o;
    o.time = SimTime::millis(ms);
    o.transmitter = tx;
    o.addressee = to;
    o.type = type;
    o.key = kKey;
    return o;
}

std::vector<std::pair<S, S>> edges_of(const Monitor& m, NodeId n) {
    std::vector<std::pair<S, S>> out;
    auto it = m.history().find(n);
    if (it == m.history().end()) return out;
    for (const auto& t : it->second) out.emplace_back(t.from, t.to);
    return out;
}

DetectionParams plain() {
    DetectionParams p;
    p.header_extensions = false;
    return p;
}

}  // namespace

TEST_CASE("worked LMU example gives the three neighbor rows") {
    Monitor m(N, {X, Y, Z}, plain());
    m.observe(obs(1, X, PacketType::Rreq));
    m.observe(obs(2, Y, PacketType::Rreq));
    m.observe(obs(3, N, PacketType::Rreq));
    m.observe(obs(4, Z, PacketType::Rreq));
    m.observe(obs(5, Z, PacketType::Rrep, N));
    m.observe(obs(6, N, PacketType::Rrep, X));
    m.observe(obs(7, X, PacketType::Rrep, Src));
    m.advance(SimTime::seconds(1));

    CHECK(edges_of(m, X) == std::vector<std::pair<S, S>>{{S::Init, S::FwdRreq}, {S::FwdRreq, S::FwdRreq},
                                                          {S::FwdRreq, S::RcvdRrep}, {S::RcvdRrep, S::Complete}});
    CHECK(edges_of(m, Y) == std::vector<std::pair<S, S>>{{S::Init, S::FwdRreq}, {S::FwdRreq, S::FwdRreq},
                                                          {S::FwdRreq, S::TimeoutRreq}});
    CHECK(edges_of(m, Z) == std::vector<std::pair<S, S>>{{S::Init, S::RcvdRreq}, {S::RcvdRreq, S::FwdRreq},
                                                          {S::FwdRreq, S::Complete}});
}

TEST_CASE("rrep timeout and final states") {
    Monitor m(N, {X}, plain());
    m.observe(obs(1, N, PacketType::Rreq));
    m.observe(obs(2, N, PacketType::Rrep, X));
    CHECK(m.state(X, kKey) == S::RcvdRrep);
    m.advance(SimTime::seconds(1));
    CHECK(edges_of(m, X).back() == std::pair{S::RcvdRrep, S::TimeoutRrep});
    CHECK(m.state(X, kKey) == S::Init);

    // A timeout after completion is a no-op.
    Monitor c(N, {X}, plain());
    c.observe(obs(1, N, PacketType::Rreq));
    c.observe(obs(2, X, PacketType::Rrep, N));
    c.advance(SimTime::seconds(1));
    CHECK(edges_of(c, X).size() == 2);
}

TEST_CASE("a reply without an observed request is discarded at expiry") {
    Monitor m(N, {X}, plain());
    m.observe(obs(1, X, PacketType::Rrep, N));
    CHECK(m.state(X, kKey) == S::UnexpectedRrep);
    m.advance(SimTime::seconds(1));
    CHECK(m.discarded_unexpected() == 1);
    CHECK(edges_of(m, X).empty());
}

TEST_CASE("next_to_source cross-check credits a forward the monitor missed") {
    DetectionParams p;
    Monitor m(N, {X, Y}, p);
    m.observe(obs(1, N, PacketType::Rreq));
    auto o = obs(2, Y, PacketType::Rreq);
    o.next_to_source = X;
    m.observe(o);
    CHECK(m.state(X, kKey) == S::FwdRreq);

    Monitor off(N, {X, Y}, plain());
    off.observe(obs(1, N, PacketType::Rreq));
    off.observe(o);
    CHECK(off.state(X, kKey) == S::RcvdRreq);
}

TEST_CASE("snapshot window is half-open") {
    DetectionParams p = plain();
    p.window_period = SimTime::seconds(1);
    p.window_multiple = 2;
    p.rreq_timeout = SimTime::millis(100);
    Monitor m(N, {X, Y}, p);
    m.observe(obs(1000, N, PacketType::Rreq));
    m.advance(SimTime::seconds(5));
    // 1->3 at 1.0 s, 3->5 at 1.1 s
    auto s = m.snapshot(SimTime::millis(3000));
    CHECK(s.neighbors.size() == 2);
    CHECK(s.matrices[0].total() == 1);
    s = m.snapshot(SimTime::millis(3100));
    CHECK(s.neighbors.empty());
    CHECK(s.insufficient.size() == 2);
    CHECK(m.snapshot(SimTime::millis(2999)).matrices[0].total() == 2);
}

TEST_CASE("fuzzed observations only ever record FSM edges") {
    Rng rng(7);
    const std::vector<NodeId> nodes{N, X, Y, Z, NodeId(4)};
    Monitor m(N, {X, Y, Z, NodeId(4)}, DetectionParams{});
    for (int i = 0; i < 5000; ++i) {
        Observation o;
        o.time = SimTime::millis(static_cast<double>(i));
        o.transmitter = nodes[rng.uniform_int(0, 4)];
        o.addressee = rng.bernoulli(0.3) ? NodeId::broadcast() : nodes[rng.uniform_int(0, 4)];
        o.type = rng.bernoulli(0.5) ? PacketType::Rreq : PacketType::Rrep;
        o.key = LmuKey{NodeId(static_cast<int>(rng.uniform_int(5, 7))), NodeId(8)};
        o.next_to_source = nodes[rng.uniform_int(0, 4)];
        m.observe(o);
    }
    m.advance(SimTime::max() - SimTime::seconds(1));
    std::size_t total = 0;
    for (const auto& [n, ts] : m.history()) {
        for (std::size_t i = 0; i < ts.size(); ++i) {
            CHECK(is_edge(ts[i].from, ts[i].to));
            if (i == 0 || is_final(ts[i - 1].to)) CHECK(ts[i].from == S::Init);
        }
        if (!ts.empty()) CHECK(is_final(ts.back().to));
        total += ts.size();
    }
    CHECK(total > 0);
}

TEST_CASE("trace replay reproduces live observation on a lossless grid") {
    engine::TopologyConfig topo;
    topo.nodes = engine::grid_placement(3, 3, 100);
    topo.radio_range = 120;
    aodv::RouterParams rp;
    rp.ttl = 6;
    rp.intermediate_replies = false;
    meshsim::testing::Net net(topo, rp);
    DetectionParams dp = plain();
    std::vector<Monitor> live;
    for (int i = 0; i < 9; ++i) live.emplace_back(NodeId(i), net.sim->topology().neighbors(NodeId(i)), dp);
    net.sim->set_frame_observer([&](const engine::Frame& f) {
        if (auto o = observation_of(f)) live[f.observer.index()].observe(*o);
    });
    for (int k = 0; k < 20; ++k) {
        const int s = k % 9, d = (k * 4 + 3) % 9;
        if (s == d) continue;
        net.sim->schedule_at(SimTime::millis(100.0 + 300 * k), NodeId(s), engine::EventKind::Application,
                             [&, s, d] { net.at(s).originate_discovery(NodeId(d), true); });
    }
    net.sim->run(SimTime::seconds(8));
    const auto in = replay_input(net.sim->trace());
    for (int i = 0; i < 9; ++i) {
        live[i].advance(SimTime::seconds(8));
        Monitor replay(NodeId(i), in.neighbors.at(NodeId(i)), dp);
        for (const auto& o : in.observations.at(NodeId(i))) replay.observe(o);
        replay.advance(SimTime::seconds(8));
        const auto a = live[i].snapshot(SimTime::seconds(8));
        const auto b = replay.snapshot(SimTime::seconds(8));
        CHECK(a.neighbors == b.neighbors);
        CHECK(a.matrices == b.matrices);
    }

    std::stringstream csv;
    net.sim->trace().write_csv(csv);
    const auto reread = engine::TraceLog::read_csv(csv);
    const auto rounds = detect_offline(reread, dp);
    CHECK(rounds.size() == 9);
    std::ostringstream out;
    write_classification_csv(out, rounds);
    CHECK(out.str().rfind("monitor,neighbor,label,C_r,P_k,k\n", 0) == 0);
}

TEST_CASE("majority vote counts decided monitors") {
    MonitorRound a, b, c;
    a.monitor = NodeId(0);
    b.monitor = NodeId(1);
    c.monitor = NodeId(2);
    for (auto* r : {&a, &b, &c}) r->neighbors = {NodeId(5)};
    a.classification.labels = {stats::Label::Selfish};
    b.classification.labels = {stats::Label::Selfish};
    c.classification.labels = {stats::Label::Cooperative};
    auto v = majority_vote({a, b, c});
    REQUIRE(v.size() == 1);
    CHECK(v[0].selfish);
    c.classification.labels = {stats::Label::Unknown};
    b.classification.labels = {stats::Label::Cooperative};
    v = majority_vote({a, b, c});
    CHECK_FALSE(v[0].selfish);
    CHECK(v[0].unknown_votes == 1);
}

TEST_CASE("parameter validation") {
    DetectionParams p;
    CHECK(p.validate().empty());
    p.alpha = 1.0;
    p.window_multiple = 0;
    CHECK(p.validate().size() == 2);
}
