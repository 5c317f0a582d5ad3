#include "meshsim/harness/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <set>
#include <thread>

#include <json.hpp>

namespace meshsim::harness {

using nlohmann::ordered_json;

namespace {

ordered_json opt(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

std::optional<double> ratio(std::uint64_t num, std::uint64_t den) {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
}

detection::DetectionParams effective_detection(const ScenarioConfig& c, const engine::Topology& t) {
    auto p = c.detection.params;
    if (!c.detection.timeouts_given) {
        // Twice the expected round trip across the network diameter.
        const auto per_hop = t.hop_delay() + c.routing.jitter_hi;
        const SimTime rtt = per_hop * (2 * std::max(1, t.diameter()));
        p.rreq_timeout = rtt * 2;
        p.rrep_timeout = rtt * 2;
    }
    return p;
}

}  // namespace

MetricsReport compute_metrics(const ScenarioConfig& config, const engine::TraceLog& trace,
                              const std::vector<detection::Verdict>* verdicts, const RunCounters& counters) {
    MetricsReport m;
    m.scenario = config.name;
    m.protocol = std::string(secure::to_string(config.protocol));
    m.duration_s = config.duration.to_seconds();
    const SimTime warmup = config.effective_warmup();
    m.warmup_s = warmup.to_seconds();
    m.events = counters.events;

    std::map<std::int32_t, std::vector<double>> delays;
    for (const auto& r : trace.records()) {
        using engine::TraceKind;
        switch (r.kind) {
            case TraceKind::Deliver: {
                const SimTime created = r.time - SimTime(r.latency_us);
                if (created >= warmup) delays[static_cast<std::int32_t>(r.flow_id)].push_back(static_cast<double>(r.latency_us) / 1e3);
                break;
            }
            case TraceKind::Tx:
                if (r.type && *r.type != aodv::PacketType::Data) ++m.control_tx[std::string(aodv::to_string(*r.type))];
                break;
            case TraceKind::Drop:
                ++m.drops["drop-" + std::string(engine::to_string(r.cause))];
                break;
            case TraceKind::Rx:
            case TraceKind::Overhear:
            case TraceKind::Tunnel: break;
            default: {
                const std::string name(engine::to_string(r.kind));
                if (name.rfind("reject-", 0) == 0) ++m.rejects[name];
                else ++m.drops[name];
            }
        }
    }
    for (const auto& [type, n] : m.control_tx) m.control_overhead += n;

    for (const auto& f : config.flows) {
        FlowMetrics fm;
        fm.id = f.id;
        fm.src = f.src;
        fm.dest = f.dest;
        if (auto it = counters.sent_after_warmup.find(f.id); it != counters.sent_after_warmup.end()) fm.sent = it->second;
        auto& d = delays[f.id];
        fm.delivered = std::min<std::uint64_t>(d.size(), fm.sent);
        fm.pdr = ratio(fm.delivered, fm.sent);
        if (!d.empty()) {
            std::sort(d.begin(), d.end());
            double sum = 0.0;
            for (double x : d) sum += x;
            fm.mean_delay_ms = sum / static_cast<double>(d.size());
            const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(d.size())));
            fm.p95_delay_ms = d[std::max<std::size_t>(rank, 1) - 1];
        }
        m.flows.push_back(fm);
    }

    m.routes = counters.routes;
    m.routes.fraction_via_adversary = ratio(m.routes.via_adversary, m.routes.discovered);

    if (verdicts) {
        DetectionMetrics dm;
        for (const auto& v : *verdicts) {
            if (v.selfish_votes + v.cooperative_votes == 0) continue;
            ++dm.labeled;
            const bool truth = config.adversaries.count(v.node) > 0;
            if (v.selfish) dm.flagged.push_back(v.node);
            if (v.selfish && truth) ++dm.true_positives;
            else if (v.selfish) ++dm.false_positives;
            else if (truth) ++dm.false_negatives;
            else ++dm.true_negatives;
        }
        dm.precision = ratio(dm.true_positives, dm.true_positives + dm.false_positives);
        dm.recall = ratio(dm.true_positives, dm.true_positives + dm.false_negatives);
        dm.false_positive_rate = ratio(dm.false_positives, dm.false_positives + dm.true_negatives);
        m.detection = dm;
    }
    return m;
}

RunOutput run_scenario(const ScenarioConfig& config, std::optional<std::uint64_t> seed_override) {
    RunOutput out;
    RunCounters counters;
    // Self-rescheduling closures; they must outlive the simulator run.
    std::vector<std::unique_ptr<std::function<void()>>> loops;
    const std::uint64_t seed = seed_override.value_or(config.seed);
    engine::EngineConfig ec = config.engine;
    ec.seed = seed;
    engine::Simulator sim(engine::build_topology(config.topology), ec);
    const auto& topo = sim.topology();
    const int n = topo.size();
    const SimTime warmup = config.effective_warmup();

    std::unique_ptr<secure::KeyAuthority> authority;
    if (config.protocol == secure::Protocol::Saodv || config.protocol == secure::Protocol::Seaodv) {
        auto cp = config.crypto;
        if (cp.chain_length <= 0) cp.chain_length = config.routing.ttl;
        authority = std::make_unique<secure::KeyAuthority>(n, cp, seed);
    }

    std::vector<std::unique_ptr<aodv::RoutingAgent>> agents;
    for (int i = 0; i < n; ++i) {
        std::optional<adversary::AttackProfile> prof;
        if (auto it = config.adversaries.find(NodeId(i)); it != config.adversaries.end()) prof = it->second;
        if (config.protocol == secure::Protocol::Qos) {
            auto qp = config.qos;
            qp.ttl = config.routing.ttl;
            auto r = std::make_unique<qos::QosRouter>(sim, NodeId(i), qp, prof);
            for (const auto& f : config.flows) r->register_flow(f);
            agents.push_back(std::move(r));
        } else {
            auto rp = config.routing;
            rp.protocol = config.protocol;
            agents.push_back(std::make_unique<aodv::Router>(sim, NodeId(i), rp, prof, authority.get()));
        }
        sim.attach(NodeId(i), agents.back().get());
    }

    auto on_route = [&](NodeId origin, NodeId target) {
        ++counters.routes.discovered;
        std::set<NodeId> seen{origin};
        NodeId cur = origin;
        bool via = false;
        for (int hop = 0; hop <= config.routing.ttl + 1; ++hop) {
            const auto nh = agents[cur.index()]->next_hop(target);
            if (!nh || *nh == target || !nh->valid() || nh->value() >= n) break;
            if (config.adversaries.count(*nh)) via = true;
            if (!seen.insert(*nh).second) break;
            cur = *nh;
        }
        if (via) ++counters.routes.via_adversary;
    };
    for (auto& a : agents) a->on_route = on_route;

    for (const auto& f : config.flows) {
        const SimTime stop = std::min(f.stop, config.duration);
        const SimTime gap = std::max(SimTime::seconds(1.0 / f.rate), SimTime(1));
        auto seq = std::make_shared<std::uint32_t>(0);
        auto* agent = agents[f.src.index()].get();
        auto* tick = loops.emplace_back(std::make_unique<std::function<void()>>()).get();
        *tick = [&sim, &counters, agent, f, stop, gap, seq, warmup, tick] {
            if (sim.now() >= stop) return;
            if (sim.now() >= warmup) ++counters.sent_after_warmup[f.id];
            agent->send_data(f, (*seq)++);
            sim.schedule_in(gap, f.src, [tick] { (*tick)(); });
        };
        sim.schedule_at(f.start, f.src, engine::EventKind::Application, [tick] { (*tick)(); });
    }

    if (config.discoveries.count > 0) {
        auto& wl = sim.global_rng(StreamPurpose::Workload);
        const auto& pairs = config.discoveries.pairs;
        for (int k = 0; k < config.discoveries.count; ++k) {
            std::pair<NodeId, NodeId> p;
            if (!pairs.empty()) {
                p = pairs[static_cast<std::size_t>(k) % pairs.size()];
            } else {
                const auto s = static_cast<int>(wl.uniform_int(0, static_cast<std::uint64_t>(n - 1)));
                auto d = static_cast<int>(wl.uniform_int(0, static_cast<std::uint64_t>(n - 2)));
                if (d >= s) ++d;
                p = {NodeId(s), NodeId(d)};
            }
            const SimTime at = config.discoveries.start + config.discoveries.interval * k;
            auto* agent = agents[p.first.index()].get();
            const NodeId dest = p.second;
            sim.schedule_at(at, p.first, engine::EventKind::Application, [agent, dest] { agent->originate_discovery(dest, true); });
        }
    }

    std::vector<detection::Monitor> monitors;
    if (config.detection.enabled) {
        const auto dp = effective_detection(config, topo);
        for (int i = 0; i < n; ++i) monitors.emplace_back(NodeId(i), topo.neighbors(NodeId(i)), dp);
        sim.set_frame_observer([&monitors](const engine::Frame& f) {
            if (auto o = detection::observation_of(f)) monitors[f.observer.index()].observe(*o);
        });
        auto* round = loops.emplace_back(std::make_unique<std::function<void()>>()).get();
        *round = [&, round, dp] {
            std::vector<detection::MonitorRound> rounds;
            for (auto& m : monitors) {
                m.advance(sim.now());
                rounds.push_back(detection::classify_round(m, sim.now()));
            }
            if (config.detection.feed_routing) {
                for (const auto& r : rounds) {
                    std::map<NodeId, bool> verdict;
                    for (std::size_t i = 0; i < r.neighbors.size(); ++i) {
                        const auto label = r.classification.labels.at(i);
                        if (label != stats::Label::Unknown) verdict[r.neighbors[i]] = label == stats::Label::Selfish;
                    }
                    agents[r.monitor.index()]->apply_detection(verdict);
                }
            }
            out.verdicts = detection::majority_vote(rounds);
            out.last_rounds = std::move(rounds);
            if (sim.now() + dp.window_period <= config.duration)
                sim.schedule_in(dp.window_period, NodeId::none(), [round] { (*round)(); });
        };
        const SimTime first = dp.window();
        if (first <= config.duration) sim.schedule_at(first, NodeId::none(), engine::EventKind::Timer, [round] { (*round)(); });
    }

    for (auto& a : agents) a->start();
    const auto result = sim.run(config.duration);
    counters.events = result.events;
    out.overflow = result.overflow;
    if (out.overflow) {
        std::uint64_t best = 0;
        for (int i = 0; i < n; ++i) {
            const auto c = agents[static_cast<std::size_t>(i)]->originated_rreqs();
            if (c > best || (c == best && config.adversaries.count(NodeId(i)) &&
                             config.adversaries.at(NodeId(i)).kind == adversary::Kind::RreqFlood)) {
                best = c;
                out.flooding_node = NodeId(i);
            }
        }
        out.failure = "event queue overflow at t=" + std::to_string(result.stopped_at.to_seconds()) + " s: node " +
                      std::to_string(out.flooding_node.value()) + " originated " + std::to_string(best) + " route requests";
    }

    out.metrics = compute_metrics(config, sim.trace(), config.detection.enabled && !out.last_rounds.empty() ? &out.verdicts : nullptr,
                                  counters);
    out.metrics.seed = seed;
    out.trace = sim.trace();
    return out;
}

std::string metrics_json(const MetricsReport& m) {
    ordered_json j;
    j["scenario"] = m.scenario;
    j["seed"] = m.seed;
    j["protocol"] = m.protocol;
    j["duration_s"] = m.duration_s;
    j["warmup_s"] = m.warmup_s;
    j["events"] = m.events;
    j["flows"] = ordered_json::array();
    for (const auto& f : m.flows) {
        ordered_json fj;
        fj["id"] = f.id;
        fj["src"] = f.src.value();
        fj["dest"] = f.dest.value();
        fj["sent"] = f.sent;
        fj["delivered"] = f.delivered;
        fj["pdr"] = opt(f.pdr);
        fj["mean_delay_ms"] = opt(f.mean_delay_ms);
        fj["p95_delay_ms"] = opt(f.p95_delay_ms);
        j["flows"].push_back(fj);
    }
    j["control_overhead"] = m.control_overhead;
    j["control_tx"] = ordered_json::object();
    for (const auto& [k, v] : m.control_tx) j["control_tx"][k] = v;
    j["rejects"] = ordered_json::object();
    for (const auto& [k, v] : m.rejects) j["rejects"][k] = v;
    j["drops"] = ordered_json::object();
    for (const auto& [k, v] : m.drops) j["drops"][k] = v;
    j["routes"] = {{"discovered", m.routes.discovered},
                   {"via_adversary", m.routes.via_adversary},
                   {"fraction_via_adversary", opt(m.routes.fraction_via_adversary)}};
    if (m.detection) {
        const auto& d = *m.detection;
        ordered_json dj;
        dj["labeled"] = d.labeled;
        dj["true_positives"] = d.true_positives;
        dj["false_positives"] = d.false_positives;
        dj["true_negatives"] = d.true_negatives;
        dj["false_negatives"] = d.false_negatives;
        dj["precision"] = opt(d.precision);
        dj["recall"] = opt(d.recall);
        dj["false_positive_rate"] = opt(d.false_positive_rate);
        dj["flagged"] = ordered_json::array();
        for (NodeId f : d.flagged) dj["flagged"].push_back(f.value());
        j["detection"] = dj;
    } else {
        j["detection"] = nullptr;
    }
    return j.dump(2) + "\n";
}

void write_outputs(const RunOutput& out, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream f(dir / "trace.csv");
        out.trace.write_csv(f);
    }
    {
        std::ofstream f(dir / "metrics.json");
        f << metrics_json(out.metrics);
    }
    {
        std::ofstream f(dir / "classification.csv");
        detection::write_classification_csv(f, out.last_rounds);
    }
}

SweepSummary run_sweep(const ScenarioConfig& config, std::uint64_t first, std::uint64_t last,
                       const std::filesystem::path* out_dir, unsigned threads) {
    SweepSummary s;
    for (std::uint64_t seed = first; seed <= last; ++seed) s.seeds.push_back(seed);
    s.reports.resize(s.seeds.size());
    std::vector<char> overflow(s.seeds.size(), 0);
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, s.seeds.size())));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < s.seeds.size(); i = next++) {
            auto out = run_scenario(config, s.seeds[i]);
            if (out_dir) write_outputs(out, *out_dir / ("seed_" + std::to_string(s.seeds[i])));
            overflow[i] = out.overflow;
            s.reports[i] = std::move(out.metrics);
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    for (std::size_t i = 0; i < s.seeds.size(); ++i) {
        if (overflow[i]) s.overflowed.push_back(s.seeds[i]);
    }
    return s;
}

std::string sweep_json(const SweepSummary& s) {
    ordered_json j;
    j["seeds"] = s.seeds;
    j["overflowed"] = s.overflowed;
    auto mean_of = [](const std::vector<std::optional<double>>& v) -> std::optional<double> {
        double sum = 0.0;
        int n = 0;
        for (const auto& x : v) {
            if (x) {
                sum += *x;
                ++n;
            }
        }
        if (n == 0) return std::nullopt;
        return sum / n;
    };
    j["flows"] = ordered_json::array();
    if (!s.reports.empty()) {
        for (std::size_t f = 0; f < s.reports.front().flows.size(); ++f) {
            std::vector<std::optional<double>> pdr;
            ordered_json per = ordered_json::array();
            for (const auto& r : s.reports) {
                pdr.push_back(r.flows[f].pdr);
                per.push_back(opt(r.flows[f].pdr));
            }
            j["flows"].push_back({{"id", s.reports.front().flows[f].id}, {"mean_pdr", opt(mean_of(pdr))}, {"pdr", per}});
        }
    }
    std::vector<std::optional<double>> precision, recall, fpr, via;
    for (const auto& r : s.reports) {
        via.push_back(r.routes.fraction_via_adversary);
        if (!r.detection) continue;
        precision.push_back(r.detection->precision);
        recall.push_back(r.detection->recall);
        fpr.push_back(r.detection->false_positive_rate);
    }
    j["detection"] = {{"mean_precision", opt(mean_of(precision))},
                      {"mean_recall", opt(mean_of(recall))},
                      {"mean_false_positive_rate", opt(mean_of(fpr))}};
    j["mean_fraction_routes_via_adversary"] = opt(mean_of(via));
    return j.dump(2) + "\n";
}

}  // namespace meshsim::harness
