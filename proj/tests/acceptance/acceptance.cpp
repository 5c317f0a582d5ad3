// One line per acceptance criterion; exit status is the number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "meshsim/crypto/blom.hpp"
#include "meshsim/crypto/hash_chain.hpp"
#include "meshsim/harness/runner.hpp"
#include "meshsim/qos/estimators.hpp"
#include "meshsim/secure/secure.hpp"
#include "meshsim/stats/stats.hpp"

#ifndef MESHSIM_SCENARIO_DIR
#define MESHSIM_SCENARIO_DIR "scenarios"
#endif

using namespace meshsim;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
    std::printf("[%s] %2d %s: %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

harness::ScenarioConfig scenario(const std::string& name) {
    const auto r = harness::load_scenario(fs::path(MESHSIM_SCENARIO_DIR) / (name + ".json"));
    if (!r.ok()) {
        for (const auto& e : r.errors) std::fprintf(stderr, "%s: %s\n", name.c_str(), e.c_str());
        std::exit(2);
    }
    return *r.config;
}

// ---- crypto -----------------------------------------------------------------

void blom_symmetry() {
    Rng rng(101);
    const auto t0 = Clock::now();
    long pairs = 0, symmetric = 0;
    for (int setup = 0; setup < 50; ++setup) {
        const auto s = crypto::blom_setup(rng, 20, 4, 1009);
        for (int i = 1; i <= 20; ++i) {
            for (int j = i + 1; j <= 20; ++j) {
                ++pairs;
                symmetric += crypto::blom_pairwise_key(s.rows[static_cast<std::size_t>(i - 1)].row, s.pub.column(j), 1009) ==
                             crypto::blom_pairwise_key(s.rows[static_cast<std::size_t>(j - 1)].row, s.pub.column(i), 1009);
            }
        }
    }
    const double secs = seconds_since(t0);
    report(1, "Blom pairwise keys symmetric", pairs == 50 * 190 && symmetric == pairs && secs < 1.0,
           std::to_string(symmetric) + "/" + std::to_string(pairs) + " pairs, " + fmt("%.3f s", secs));
}

void blom_toy() {
    const crypto::BlomPublic pub{7, 1, 3, 3};
    const auto s = crypto::blom_setup_with_matrix(pub, crypto::SymmetricMatrix{2, {1, 2, 2, 3}});
    const bool rows = s.rows[0].row == std::vector<std::uint64_t>{0, 4} && s.rows[1].row == std::vector<std::uint64_t>{5, 1} &&
                      s.rows[2].row == std::vector<std::uint64_t>{6, 6};
    const auto k12 = crypto::blom_pairwise_key(s.rows[0].row, pub.column(2), 7);
    const auto k21 = crypto::blom_pairwise_key(s.rows[1].row, pub.column(1), 7);
    report(2, "Blom GF(7) worked example", rows && k12 == 1 && k21 == 1,
           std::string("rows ") + (rows ? "match" : "differ") + ", K12=" + std::to_string(k12) + " K21=" + std::to_string(k21));
}

void hash_chain_soundness() {
    const crypto::Hasher h(8);
    Rng rng(303);
    long authentic = 0, authentic_ok = 0, forged = 0, false_accepts = 0, decrements = 0;
    constexpr int N = 10;
    for (int c = 0; c < 10; ++c) {
        const auto chain = crypto::saodv_chain_generate(h, rng, N);
        for (int hc = 0; hc <= N; ++hc) {
            const auto hca = crypto::hca_for_hopcount(chain, hc);
            ++authentic;
            authentic_ok += crypto::hca_verify(h, chain.anchor(), N, hc, hca);
            for (int d = 1; d <= hc; ++d) {
                ++decrements;
                false_accepts += crypto::hca_verify(h, chain.anchor(), N, hc - d, hca);
            }
        }
        for (int k = 0; k < 1000; ++k) {
            ++forged;
            const int hc = static_cast<int>(rng.uniform_int(0, N));
            false_accepts += crypto::hca_verify(h, chain.anchor(), N, hc, h.random(rng));
        }
    }
    report(3, "hash-chain soundness (64-bit digests)", authentic_ok == authentic && false_accepts == 0 && forged == 10000,
           std::to_string(authentic_ok) + "/" + std::to_string(authentic) + " authentic accepted, " + std::to_string(forged) +
               " forged + " + std::to_string(decrements) + " decrements, " + std::to_string(false_accepts) + " false accepts");
}

// ---- SEAODV field mutation ---------------------------------------------------

using aodv::Packet;
using Mutator = std::function<void(Packet&, int, Rng&)>;

template <class T> void bump(T& v, int variant, Rng& rng) {
    const T before = v;
    if constexpr (std::is_same_v<T, NodeId>) {
        if (variant == 0) v = NodeId(before.value() + 1);
        else if (variant == 1) v = NodeId(before.value() - 1);
        else while (v == before) v = NodeId(static_cast<std::int32_t>(rng.uniform_int(0, 1000)));
    } else if constexpr (std::is_same_v<T, bool>) {
        v = !before;
    } else if constexpr (std::is_same_v<T, SimTime>) {
        if (variant == 0) v = before + SimTime(1);
        else if (variant == 1) v = before - SimTime(1);
        else while (v == before) v = SimTime(static_cast<std::int64_t>(rng.uniform_int(0, 1u << 30)));
    } else if constexpr (std::is_enum_v<T>) {
        using U = std::underlying_type_t<T>;
        const auto u = static_cast<U>(before);
        if (variant == 0) v = static_cast<T>(u + 1);
        else if (variant == 1) v = static_cast<T>(u - 1);
        else while (v == before) v = static_cast<T>(static_cast<U>(rng.next_u64()));
    } else {
        if (variant == 0) v = static_cast<T>(before + 1);
        else if (variant == 1) v = static_cast<T>(before - 1);
        else while (v == before) v = static_cast<T>(rng.next_u64());
    }
}

template <class Get> Mutator field(Get get) {
    return [get](Packet& p, int variant, Rng& rng) { bump(get(p), variant, rng); };
}

std::vector<Mutator> node_list_mutators(std::function<std::vector<NodeId>&(Packet&)> get, std::size_t n) {
    std::vector<Mutator> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back([get, i](Packet& p, int v, Rng& rng) { bump(get(p)[i], v, rng); });
    out.push_back([get](Packet& p, int v, Rng& rng) {
        auto& r = get(p);
        if (v == 1) r.pop_back();
        else r.push_back(NodeId(static_cast<std::int32_t>(rng.uniform_int(0, 1000))));
    });
    return out;
}

void seaodv_mutation() {
    secure::CryptoParams cp;
    secure::KeyAuthority auth(8, cp, 404);
    Rng rng(404);
    std::vector<secure::SeaodvKeys> keys;
    for (int i = 0; i < 8; ++i) keys.emplace_back(NodeId(i), auth, rng);
    for (int a = 0; a < 8; ++a) {
        for (int b = 0; b < 8; ++b) {
            if (a != b) keys[static_cast<std::size_t>(a)].install_pair(NodeId(b), keys[static_cast<std::size_t>(b)]);
        }
    }

    aodv::Rreq q;
    q.src = NodeId(0);
    q.src_seq = 5;
    q.bcast_id = 3;
    q.dest = NodeId(6);
    q.dest_seq_known = 2;
    q.ttl = 7;
    q.next_to_source = NodeId(0);
    q.route = {NodeId(0)};
    aodv::Rrep r;
    r.target = NodeId(6);
    r.origin = NodeId(0);
    r.dest_seq = 9;
    r.lifetime = SimTime::seconds(3);
    r.next_to_destination = NodeId(6);
    r.flow_id = 1;
    r.attempt = 2;
    r.probe_delay_us = 1500;
    r.reliability_milli = 1900;
    r.route = {NodeId(0), NodeId(1), NodeId(2), NodeId(3), NodeId(4), NodeId(5), NodeId(6)};
    aodv::Rerr e;
    e.unreachable = {{NodeId(6), 9}, {NodeId(4), 3}};
    e.notify = NodeId(0);
    e.flow_id = 1;
    e.reason = aodv::RerrReason::Bandwidth;
    e.route = {NodeId(0), NodeId(1), NodeId(2), NodeId(3), NodeId(4), NodeId(5)};

    // uid is simulator bookkeeping, not a wire field.
    std::vector<Mutator> common{field([](Packet& p) -> NodeId& { return p.sender; })};
    auto RQ = [](Packet& p) -> aodv::Rreq& { return p.as<aodv::Rreq>(); };
    auto RP = [](Packet& p) -> aodv::Rrep& { return p.as<aodv::Rrep>(); };
    auto RE = [](Packet& p) -> aodv::Rerr& { return p.as<aodv::Rerr>(); };
    std::vector<Mutator> rreq_m{
        field([=](Packet& p) -> auto& { return RQ(p).src; }), field([=](Packet& p) -> auto& { return RQ(p).src_seq; }),
        field([=](Packet& p) -> auto& { return RQ(p).bcast_id; }), field([=](Packet& p) -> auto& { return RQ(p).dest; }),
        field([=](Packet& p) -> auto& { return RQ(p).dest_seq_known; }),
        field([=](Packet& p) -> auto& { return RQ(p).hop_count; }), field([=](Packet& p) -> auto& { return RQ(p).ttl; }),
        field([=](Packet& p) -> auto& { return RQ(p).next_to_source; }),
        field([=](Packet& p) -> auto& { return RQ(p).duplicate_flag; })};
    std::vector<Mutator> rrep_m{
        field([=](Packet& p) -> auto& { return RP(p).target; }), field([=](Packet& p) -> auto& { return RP(p).origin; }),
        field([=](Packet& p) -> auto& { return RP(p).dest_seq; }), field([=](Packet& p) -> auto& { return RP(p).hop_count; }),
        field([=](Packet& p) -> auto& { return RP(p).lifetime; }),
        field([=](Packet& p) -> auto& { return RP(p).next_to_destination; }),
        field([=](Packet& p) -> auto& { return RP(p).flags; }), field([=](Packet& p) -> auto& { return RP(p).flow_id; }),
        field([=](Packet& p) -> auto& { return RP(p).attempt; }),
        field([=](Packet& p) -> auto& { return RP(p).probe_delay_us; }),
        field([=](Packet& p) -> auto& { return RP(p).reliability_milli; })};
    std::vector<Mutator> rerr_m{field([=](Packet& p) -> auto& { return RE(p).notify; }),
                                field([=](Packet& p) -> auto& { return RE(p).flow_id; }),
                                field([=](Packet& p) -> auto& { return RE(p).reason; })};
    for (std::size_t i = 0; i < e.unreachable.size(); ++i) {
        rerr_m.push_back(field([=](Packet& p) -> auto& { return RE(p).unreachable[i].dest; }));
        rerr_m.push_back(field([=](Packet& p) -> auto& { return RE(p).unreachable[i].dest_seq; }));
    }
    rerr_m.push_back([=](Packet& p, int, Rng&) { RE(p).unreachable.push_back({NodeId(7), 1}); });

    long honest = 0, honest_ok = 0, mutations = 0, accepted = 0;
    auto run_chain = [&](aodv::Body body, std::vector<Mutator> specific, auto route_of, bool reverse) {
        for (auto& m : common) specific.push_back(m);
        // Hop k is sent by node k (or 6 - k walking back) to the next node.
        for (int hop = 0; hop < 5; ++hop) {
            const int from = reverse ? 6 - hop : hop;
            const int to = reverse ? from - 1 : from + 1;
            Packet p;
            p.sender = NodeId(from);
            p.uid = 1000 + static_cast<std::uint64_t>(hop);
            p.body = body;
            std::visit([hop](auto& b) {
                if constexpr (requires { b.hop_count; }) b.hop_count = static_cast<std::uint8_t>(hop);
            }, p.body);
            keys[static_cast<std::size_t>(from)].protect(p, NodeId(to));
            ++honest;
            honest_ok += keys[static_cast<std::size_t>(to)].verify(p) == secure::Verdict::Accept;

            auto all = specific;
            for (auto& m : node_list_mutators(route_of, route_of(p).size())) all.push_back(m);
            for (const auto& m : all) {
                for (int variant = 0; variant < 3; ++variant) {
                    Packet x = p;
                    m(x, variant, rng);
                    ++mutations;
                    accepted += keys[static_cast<std::size_t>(to)].verify(x) == secure::Verdict::Accept;
                }
            }
        }
    };
    run_chain(q, rreq_m, [](Packet& p) -> std::vector<NodeId>& { return p.as<aodv::Rreq>().route; }, false);
    run_chain(r, rrep_m, [](Packet& p) -> std::vector<NodeId>& { return p.as<aodv::Rrep>().route; }, true);
    run_chain(e, rerr_m, [](Packet& p) -> std::vector<NodeId>& { return p.as<aodv::Rerr>().route; }, true);
    report(4, "SEAODV single-field mutation", honest_ok == honest && accepted == 0,
           std::to_string(honest_ok) + "/" + std::to_string(honest) + " honest hops accepted, " + std::to_string(accepted) + "/" +
               std::to_string(mutations) + " mutations accepted");
}

// ---- statistics ---------------------------------------------------------------

std::vector<std::int64_t> multinomial(const std::vector<double>& probs, int total, Rng& rng) {
    std::vector<std::int64_t> row(probs.size(), 0);
    for (int i = 0; i < total; ++i) {
        const double u = rng.uniform01();
        double acc = 0.0;
        for (std::size_t j = 0; j < probs.size(); ++j) {
            acc += probs[j];
            if (u < acc || j + 1 == probs.size()) {
                ++row[j];
                break;
            }
        }
    }
    return row;
}

void chi2_calibration() {
    Rng rng(505);
    const std::vector<double> p{0.4, 0.3, 0.2, 0.1};
    // Total-variation distance 0.4 from p.
    const std::vector<double> q{0.1, 0.1, 0.3, 0.5};
    const int trials = 10000;
    int size = 0, power = 0;
    for (int t = 0; t < trials; ++t) {
        size += stats::chi2_row_test(multinomial(p, 200, rng), multinomial(p, 200, rng), 0.05).reject;
        power += stats::chi2_row_test(multinomial(p, 200, rng), multinomial(q, 200, rng), 0.05).reject;
    }
    const double a = static_cast<double>(size) / trials;
    const double b = static_cast<double>(power) / trials;
    report(5, "chi-square calibration and power", a >= 0.03 && a <= 0.07 && b >= 0.95,
           fmt("null rejection %.4f", a) + fmt(", power at TV 0.4 %.4f", b));
}

void dissimilarity_bounds() {
    Rng rng(606);
    long checked = 0, bad = 0;
    for (int t = 0; t < 100000; ++t) {
        const int n = static_cast<int>(rng.uniform_int(3, 8));
        stats::SquareMatrix L(n, 1.0);
        for (int r = 0; r < n; ++r) {
            for (int s = r + 1; s < n; ++s) {
                const double v = rng.bernoulli(0.2) ? 0.0 : rng.uniform01();
                L(r, s) = v;
                L(s, r) = v;
            }
        }
        const int r = static_cast<int>(rng.uniform_int(0, static_cast<std::uint64_t>(n - 1)));
        int s = static_cast<int>(rng.uniform_int(0, static_cast<std::uint64_t>(n - 2)));
        if (s >= r) ++s;
        const double a = stats::dissimilarity_d(r, s, L);
        const double b = stats::dissimilarity_d(s, r, L);
        ++checked;
        if (!(a >= 0.0 && a <= 1.0) || a != b) ++bad;
    }
    report(6, "dissimilarity bounded and symmetric", bad == 0,
           std::to_string(checked) + " fuzzed matrices, " + std::to_string(bad) + " violations");
}

// ---- detection ---------------------------------------------------------------

void detection_run(int id, const std::string& name, const std::string& file, bool ideal) {
    const auto cfg = scenario(file);
    double worst_secs = 0.0, sum_recall = 0.0, sum_fpr = 0.0;
    bool all_perfect = true, all_defined = true;
    std::string per_seed;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto t0 = Clock::now();
        const auto out = harness::run_scenario(cfg, seed);
        worst_secs = std::max(worst_secs, seconds_since(t0));
        const auto& d = out.metrics.detection;
        if (!d || !d->recall || !d->false_positive_rate) {
            all_defined = false;
            continue;
        }
        sum_recall += *d->recall;
        sum_fpr += *d->false_positive_rate;
        if (*d->recall != 1.0 || *d->false_positive_rate != 0.0) all_perfect = false;
    }
    const double recall = sum_recall / 10.0, fpr = sum_fpr / 10.0;
    const bool pass = all_defined && worst_secs < 30.0 && (ideal ? all_perfect : recall >= 0.75 && fpr <= 0.10);
    report(id, name, pass,
           fmt("mean recall %.3f", recall) + fmt(", mean FPR %.3f", fpr) + (ideal ? (all_perfect ? ", every seed exact" : ", some seed inexact") : "") +
               fmt(", slowest seed %.2f s", worst_secs));
}

// ---- qos ----------------------------------------------------------------------

void ewma_latency() {
    double r = 1.0;
    int intervals = 0;
    while (r >= qos::kGateThreshold && intervals < 100) {
        r = qos::update_reliability(r, 0.0, 0.5);
        ++intervals;
    }
    report(9, "reliability falls below the gate", intervals == 2, std::to_string(intervals) + fmt(" intervals, R=%.3f", r));
}

void bandwidth_point() {
    // size / (RTT sqrt(2p/3) + RTO min(1, 3 sqrt(3p/8)) p (1 + 32 p^2)) evaluated by hand.
    constexpr double kHand = 118722.75316;
    const double v = qos::estimate_bandwidth(1000, 0.1, 0.14, 0.01);
    bool monotone = true;
    double prev = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 100; ++i) {
        const double p = std::exp(std::log(1e-4) + (std::log(0.5) - std::log(1e-4)) * i / 99.0);
        const double b = qos::estimate_bandwidth(1000, 0.1, 0.14, p);
        monotone = monotone && b < prev;
        prev = b;
    }
    const double rel = std::abs(v - kHand) / kHand;
    report(10, "bandwidth estimator", rel < 1e-3 && monotone,
           fmt("%.2f B/s", v) + fmt(" (rel. error %.2e)", rel) + (monotone ? ", strictly decreasing in p" : ", not monotone"));
}

// ---- attack baselines -------------------------------------------------------------

double mean_pdr(const harness::SweepSummary& s) {
    double sum = 0.0;
    for (const auto& r : s.reports) sum += r.flows.front().pdr.value_or(0.0);
    return sum / static_cast<double>(s.reports.size());
}

double max_pdr(const harness::SweepSummary& s) {
    double m = 0.0;
    for (const auto& r : s.reports) m = std::max(m, r.flows.front().pdr.value_or(0.0));
    return m;
}

double mean_via(const harness::SweepSummary& s) {
    double sum = 0.0;
    for (const auto& r : s.reports) sum += r.routes.fraction_via_adversary.value_or(0.0);
    return sum / static_cast<double>(s.reports.size());
}

void attack_baselines() {
    const auto bh_aodv = harness::run_sweep(scenario("blackhole_aodv"), 1, 10, nullptr);
    const auto bh_qos = harness::run_sweep(scenario("blackhole_qos"), 1, 10, nullptr);
    const auto rush_aodv = harness::run_sweep(scenario("rushing_aodv"), 1, 10, nullptr);
    const auto rush_saodv = harness::run_sweep(scenario("rushing_saodv"), 1, 10, nullptr);
    const double a = max_pdr(bh_aodv), b = mean_pdr(bh_qos), c = mean_via(rush_aodv), d = mean_via(rush_saodv);
    report(11, "attack baselines", a == 0.0 && b >= 0.9 && c >= 0.8 && d <= 0.1,
           fmt("blackhole AODV PDR %.3f", a) + fmt(", blackhole qos PDR %.3f", b) + fmt(", rushing on %.0f%% of AODV routes", 100 * c) +
               fmt(" and %.0f%% with SAODV + randomized forwarding", 100 * d));
}

// ---- determinism ---------------------------------------------------------------

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void determinism() {
    const fs::path root = fs::temp_directory_path() / "meshsim_acceptance";
    fs::remove_all(root);
    int scenarios = 0, identical = 0;
    std::string mismatched;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(MESHSIM_SCENARIO_DIR)) {
        if (entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
        const auto r = harness::load_scenario(file);
        if (!r.ok()) continue;
        ++scenarios;
        const auto name = file.stem().string();
        harness::write_outputs(harness::run_scenario(*r.config), root / name / "a");
        harness::write_outputs(harness::run_scenario(*r.config), root / name / "b");
        bool same = true;
        for (const char* f : {"trace.csv", "metrics.json", "classification.csv"}) {
            same = same && slurp(root / name / "a" / f) == slurp(root / name / "b" / f);
        }
        if (same) ++identical;
        else mismatched += " " + name;
    }
    fs::remove_all(root);
    report(12, "byte-identical reruns", scenarios > 0 && identical == scenarios,
           std::to_string(identical) + "/" + std::to_string(scenarios) + " scenarios identical" + mismatched);
}

}  // namespace

int main() {
    blom_symmetry();
    blom_toy();
    hash_chain_soundness();
    seaodv_mutation();
    chi2_calibration();
    dissimilarity_bounds();
    detection_run(7, "detection, lossless 5x5 grid", "detect_ideal", true);
    detection_run(8, "detection, 10% loss 5x5 grid", "detect_noisy", false);
    ewma_latency();
    bandwidth_point();
    attack_baselines();
    determinism();
    std::printf("%d of 12 criteria failed\n", failures);
    return failures;
}
