#include <doctest.h>

#include <cmath>
#include <memory>
#include <vector>

#include "meshsim/qos/qos_router.hpp"
#include "unit/net_fixture.hpp"

using namespace meshsim;
using namespace meshsim::qos;
using adversary::AttackProfile;
using adversary::Kind;
using engine::TraceKind;
using meshsim::testing::chain_topology;

namespace {

struct QosNet {
    std::unique_ptr<engine::Simulator> sim;
    std::vector<std::unique_ptr<QosRouter>> routers;

    QosNet(const engine::TopologyConfig& topo, QosParams params, const adversary::ProfileMap& profiles = {},
           std::uint64_t seed = 1) {
        engine::EngineConfig ec;
        ec.seed = seed;
        sim = std::make_unique<engine::Simulator>(engine::build_topology(topo), ec);
        for (int i = 0; i < sim->topology().size(); ++i) {
            std::optional<AttackProfile> prof;
            if (auto it = profiles.find(NodeId(i)); it != profiles.end()) prof = it->second;
            routers.push_back(std::make_unique<QosRouter>(*sim, NodeId(i), params, prof));
            sim->attach(NodeId(i), routers.back().get());
        }
        for (auto& r : routers) r->start();
    }
    QosRouter& at(int i) { return *routers.at(static_cast<std::size_t>(i)); }
    std::size_t count(TraceKind kind) const {
        std::size_t c = 0;
        for (const auto& r : sim->trace().records()) c += r.kind == kind;
        return c;
    }
};

aodv::FlowSpec flow(int src, int dst) {
    aodv::FlowSpec f;
    f.id = 1;
    f.src = NodeId(src);
    f.dest = NodeId(dst);
    f.rate = 50;
    f.t_max = SimTime::millis(50);
    f.b_min = 1000;
    return f;
}

int run_flow(QosNet& net, const aodv::FlowSpec& f, int packets, SimTime until) {
    int delivered = 0;
    net.at(f.dest.value()).on_deliver = [&](const aodv::Data&, SimTime) { ++delivered; };
    for (auto& r : net.routers) r->register_flow(f);
    for (int i = 0; i < packets; ++i) {
        net.sim->schedule_at(SimTime::millis(200.0 + 20.0 * i), f.src, engine::EventKind::Application,
                             [&, f, i] { net.at(f.src.value()).send_data(f, i); });
    }
    net.sim->run(until);
    net.at(f.dest.value()).on_deliver = nullptr;
    return delivered;
}

}  // namespace

TEST_CASE("ewma converges geometrically") {
    double r = 0.0;
    for (int i = 0; i < 10; ++i) r = update_reliability(r, 1.0);
    CHECK(r == doctest::Approx(1.0 - std::pow(2.0, -10)).epsilon(1e-12));
    CHECK(update_reliability(0.7, 0.7) == doctest::Approx(0.7));
    CHECK(update_reliability(1.0, 1.5) == 1.0);
}

TEST_CASE("a silent neighbor drops below the gate after exactly two intervals") {
    double r = 1.0;
    int intervals = 0;
    while (r >= kGateThreshold) {
        r = update_reliability(r, 0.0);
        ++intervals;
    }
    CHECK(intervals == 2);
    CHECK_FALSE(reliability_gate(0.5));
    CHECK(reliability_gate(0.5001));
    CHECK_FALSE(reliability_gate(std::nullopt));
}

TEST_CASE("bandwidth estimate at the hand-evaluated point") {
    const double v = estimate_bandwidth(1000, 0.1, 0.14, 0.01);
    CHECK(std::abs(v - 118722.75316) / 118722.75316 < 1e-3);
    double prev = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 100; ++i) {
        const double p = std::exp(std::log(1e-4) + (std::log(0.5) - std::log(1e-4)) * i / 99.0);
        const double b = estimate_bandwidth(1000, 0.1, 0.14, p);
        CHECK(b < prev);
        prev = b;
    }
    CHECK(estimate_bandwidth(1000, 0.1, 0.14, 0.0) == kDefaultCapacityBps);
}

TEST_CASE("rto and rtt statistics") {
    const std::vector<double> s{0.09, 0.11, 0.09, 0.11};
    const auto st = rtt_stats(s);
    CHECK(st.mean == doctest::Approx(0.1));
    CHECK(st.mad == doctest::Approx(0.01));
    CHECK(rto(st.mean, st.mad) == doctest::Approx(0.14));
}

TEST_CASE("gap classification splits wireless and congestion loss") {
    const std::vector<LinkObservation> obs{{1, 0}, {2, 0}, {5, 1}, {6, 0}};
    const auto e = estimate_congestion_loss(obs);
    REQUIRE(e.has_value());
    CHECK(e->expected == 6);
    CHECK(e->wireless == 1);
    CHECK(e->congestion == 1);
    CHECK(e->p() == doctest::Approx(1.0 / 6));
    CHECK_FALSE(estimate_congestion_loss({}).has_value());

    CongestionEstimator ce;
    ce.receive(1);
    ce.receive(2);
    ce.flag_failure();
    ce.receive(5);
    ce.receive(6);
    CHECK(*ce.p_congestion() == doctest::Approx(1.0 / 6));
}

TEST_CASE("path reliability and flood scope") {
    const std::vector<double> links{1.0, 0.8, 0.6};
    CHECK(path_reliability(links) == doctest::Approx(0.8));
    CHECK(path_reliability({}) == 0.0);

    engine::TopologyConfig c;
    c.nodes = engine::grid_placement(1, 6, 100);
    for (auto& n : c.nodes) n.mesh_group = n.id / 2;
    c.radio_range = 120;
    const auto t = engine::build_topology(c);
    const auto scope = selective_flood_scope(NodeId(0), NodeId(5), t);
    CHECK(scope == std::set<NodeId>{NodeId(0), NodeId(1), NodeId(4), NodeId(5)});
}

TEST_CASE("qos admits a chain flow after 2H probes") {
    QosParams p;
    p.selective_flooding = false;
    QosNet net(chain_topology(5), p);
    const auto f = flow(0, 4);
    CHECK(run_flow(net, f, 20, SimTime::seconds(2)) == 20);
    const auto path = net.at(0).admitted_path(1);
    REQUIRE(path.has_value());
    CHECK(path->size() == 5);
    CHECK(net.at(0).probes_sent() == 8);
    CHECK(net.at(0).admissions() == 1);
}

TEST_CASE("a node that forwards nothing is gated out by its neighbor") {
    QosParams p;
    p.selective_flooding = false;
    QosNet net(chain_topology(3), p, {{NodeId(1), AttackProfile{Kind::Selfish}}});
    for (int i = 0; i < 4; ++i) {
        net.sim->schedule_at(SimTime::millis(100 + 1000 * i), NodeId(0), engine::EventKind::Application,
                             [&] { net.at(0).originate_discovery(NodeId(2), true); });
    }
    net.sim->run(SimTime::millis(1500));
    CHECK(*net.at(0).reliability(NodeId(1)) == doctest::Approx(0.5));
    net.sim->run(SimTime::millis(2500));
    CHECK(*net.at(0).reliability(NodeId(1)) == doctest::Approx(0.25));
    CHECK_FALSE(net.at(0).gate(NodeId(1)));
    CHECK(net.at(2).gate(NodeId(1)));
}

TEST_CASE("a candidate whose probes vanish is replaced by the next one") {
    engine::TopologyConfig topo;
    topo.nodes = {{0, 0, 0}, {1, 100, 60}, {2, 100, -60}, {3, 200, 0}};
    topo.radio_range = 130;
    auto drop = AttackProfile{Kind::Selfish};
    drop.policy = adversary::SelfishPolicy::DropData;
    bool saw_fallback = false;
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        QosParams p;
        p.selective_flooding = false;
        QosNet net(topo, p, {{NodeId(1), drop}}, seed);
        const auto f = flow(0, 3);
        CHECK(run_flow(net, f, 10, SimTime::seconds(2)) == 10);
        const auto path = net.at(0).admitted_path(1);
        REQUIRE(path.has_value());
        CHECK(*path == std::vector<NodeId>{NodeId(0), NodeId(2), NodeId(3)});
        saw_fallback |= net.at(0).probes_sent() > 4;
    }
    CHECK(saw_fallback);
}

TEST_CASE("forged blackhole candidates fail probing") {
    QosParams p;
    p.selective_flooding = false;
    QosNet net(chain_topology(4), p, {{NodeId(1), AttackProfile{Kind::Blackhole}}});
    const auto f = flow(0, 3);
    CHECK(run_flow(net, f, 10, SimTime::seconds(3)) == 0);
    CHECK(net.at(0).admissions() == 0);
    CHECK(net.at(0).rejections() >= 1);
}

TEST_CASE("relay without a reservation reports a flow miss") {
    QosParams p;
    p.selective_flooding = false;
    p.reservation_timeout = SimTime::millis(100);
    QosNet net(chain_topology(4), p);
    auto f = flow(0, 3);
    f.rate = 20;
    int delivered = 0;
    net.at(3).on_deliver = [&](const aodv::Data&, SimTime) { ++delivered; };
    for (auto& r : net.routers) r->register_flow(f);
    net.sim->schedule_at(SimTime::millis(200), NodeId(0), engine::EventKind::Application, [&] { net.at(0).send_data(f, 0); });
    net.sim->schedule_at(SimTime::millis(900), NodeId(0), engine::EventKind::Application, [&] { net.at(0).send_data(f, 1); });
    net.sim->schedule_at(SimTime::millis(1500), NodeId(0), engine::EventKind::Application, [&] { net.at(0).send_data(f, 2); });
    net.sim->run(SimTime::seconds(3));
    CHECK(net.count(TraceKind::DropNoRoute) >= 1);
    CHECK(net.at(0).admissions() >= 2);
    CHECK(delivered >= 1);
}
