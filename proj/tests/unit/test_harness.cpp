#include <doctest.h>

#include <algorithm>

#include "meshsim/harness/runner.hpp"

using namespace meshsim;
using namespace meshsim::harness;

namespace {

const char* kMinimal = R"({
  "name": "pair",
  "duration": 5,
  "topology": {"nodes": [{"id": 0, "x": 0, "y": 0}, {"id": 1, "x": 50, "y": 0}], "radio_range": 100},
  "flows": [{"id": 1, "src": 0, "dest": 1, "rate": 10, "start": 1}]
})";

const char* kGrid = R"({
  "name": "grid",
  "duration": 10,
  "topology": {"grid": {"rows": 3, "cols": 3, "spacing": 100}, "radio_range": 120},
  "routing": {"ttl": 6},
  "flows": [{"id": 1, "src": 0, "dest": 8, "rate": 10, "start": 1},
            {"id": 2, "src": 6, "dest": 2, "rate": 5, "start": 2}]
})";

bool has_error(const LoadResult& r, const std::string& needle) {
    return std::any_of(r.errors.begin(), r.errors.end(), [&](const std::string& e) { return e.find(needle) != std::string::npos; });
}

}  // namespace

TEST_CASE("minimal scenario loads with defaults") {
    const auto r = parse_scenario(kMinimal);
    REQUIRE(r.ok());
    const auto& c = *r.config;
    CHECK(c.node_count() == 2);
    CHECK(c.protocol == secure::Protocol::Aodv);
    CHECK(c.flows.size() == 1);
    CHECK(c.effective_warmup() == SimTime(0));
}

TEST_CASE("loader reports every problem with its location") {
    auto r = parse_scenario(R"({
      "topology": {"grid": {"rows": 2, "cols": 2, "spacing": 10}, "radio_range": 20, "bogus": 1},
      "adversaries": {"1": {"kind": "wormhole"}},
      "flows": [{"id": 1, "src": 0, "dest": 0}]
    })");
    CHECK_FALSE(r.ok());
    CHECK(has_error(r, "bogus"));
    CHECK(has_error(r, "node 1: wormhole peer"));
    CHECK(has_error(r, "flow 1: source equals destination"));

    r = parse_scenario(R"({
      "protocol": "saodv",
      "topology": {"grid": {"rows": 2, "cols": 2, "spacing": 10}, "radio_range": 20},
      "crypto": {"q": 15, "t": 1}
    })");
    CHECK(has_error(r, "crypto.q: non-prime modulus 15"));

    CHECK_FALSE(parse_scenario("{not json").ok());
}

TEST_CASE("honest grid delivers everything") {
    const auto r = parse_scenario(kGrid);
    REQUIRE(r.ok());
    const auto out = run_scenario(*r.config);
    CHECK_FALSE(out.overflow);
    REQUIRE(out.metrics.flows.size() == 2);
    for (const auto& f : out.metrics.flows) {
        CHECK(f.sent > 0);
        CHECK(f.pdr.value() == doctest::Approx(1.0));
        CHECK(f.p95_delay_ms.value() >= f.mean_delay_ms.value() * 0.5);
    }
    CHECK(out.metrics.control_overhead > 0);
    CHECK_FALSE(out.metrics.detection.has_value());
}

TEST_CASE("detection metrics arithmetic") {
    ScenarioConfig c;
    c.adversaries[NodeId(1)].kind = adversary::Kind::Selfish;
    c.adversaries[NodeId(2)].kind = adversary::Kind::Selfish;
    c.adversaries[NodeId(3)].kind = adversary::Kind::Selfish;
    c.adversaries[NodeId(4)].kind = adversary::Kind::Selfish;
    engine::TraceLog empty;
    RunCounters counters;

    auto verdict = [](int node, bool selfish, int votes = 1) {
        detection::Verdict v;
        v.node = NodeId(node);
        v.selfish = selfish;
        (selfish ? v.selfish_votes : v.cooperative_votes) = votes;
        return v;
    };

    SUBCASE("no labels gives N/A") {
        std::vector<detection::Verdict> vs{verdict(5, false, 0)};
        const auto m = compute_metrics(c, empty, &vs, counters);
        CHECK(m.detection->labeled == 0);
        CHECK_FALSE(m.detection->precision);
        CHECK_FALSE(m.detection->recall);
        CHECK_FALSE(m.detection->false_positive_rate);
    }
    SUBCASE("three of four with one false positive") {
        std::vector<detection::Verdict> vs{verdict(1, true), verdict(2, true), verdict(3, true), verdict(4, false),
                                           verdict(5, true), verdict(6, false), verdict(7, false), verdict(8, false)};
        const auto m = compute_metrics(c, empty, &vs, counters);
        CHECK(*m.detection->precision == doctest::Approx(0.75));
        CHECK(*m.detection->recall == doctest::Approx(0.75));
        CHECK(*m.detection->false_positive_rate == doctest::Approx(0.25));
    }
    SUBCASE("perfect") {
        std::vector<detection::Verdict> vs{verdict(1, true), verdict(2, true), verdict(3, true), verdict(4, true),
                                           verdict(5, false)};
        const auto m = compute_metrics(c, empty, &vs, counters);
        CHECK(*m.detection->precision == 1.0);
        CHECK(*m.detection->recall == 1.0);
        CHECK(*m.detection->false_positive_rate == 0.0);
    }
}

TEST_CASE("same seed gives identical outputs") {
    const auto c = *parse_scenario(kGrid).config;
    const auto a = run_scenario(c, 3);
    const auto b = run_scenario(c, 3);
    std::ostringstream ta, tb;
    a.trace.write_csv(ta);
    b.trace.write_csv(tb);
    CHECK(ta.str() == tb.str());
    CHECK(metrics_json(a.metrics) == metrics_json(b.metrics));
    const auto other = run_scenario(c, 4);
    std::ostringstream to;
    other.trace.write_csv(to);
    CHECK(to.str() != ta.str());
}

TEST_CASE("event queue overflow names the flooding node") {
    auto c = *parse_scenario(kGrid).config;
    c.engine.event_cap = 500;
    auto& p = c.adversaries[NodeId(4)];
    p.kind = adversary::Kind::RreqFlood;
    p.rate = 50000;
    const auto out = run_scenario(c);
    REQUIRE(out.overflow);
    CHECK(out.flooding_node == NodeId(4));
    CHECK(out.failure.find("node 4") != std::string::npos);
}

TEST_CASE("sweep aggregates per seed") {
    auto c = *parse_scenario(kGrid).config;
    c.duration = SimTime::seconds(4);
    const auto s = run_sweep(c, 1, 3, nullptr, 2);
    CHECK(s.reports.size() == 3);
    CHECK(s.reports[1].seed == 2);
    const auto j = sweep_json(s);
    CHECK(j.find("\"mean_pdr\"") != std::string::npos);
}
