#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "meshsim/detection/monitor.hpp"
#include "meshsim/engine/trace.hpp"
#include "meshsim/harness/scenario.hpp"

namespace meshsim::harness {

struct FlowMetrics {
    std::int32_t id = 0;
    NodeId src;
    NodeId dest;
    std::uint64_t sent = 0;       // created after warm-up
    std::uint64_t delivered = 0;  // of those
    std::optional<double> pdr;
    std::optional<double> mean_delay_ms;
    std::optional<double> p95_delay_ms;
};

struct DetectionMetrics {
    std::uint64_t true_positives = 0;
    std::uint64_t false_positives = 0;
    std::uint64_t true_negatives = 0;
    std::uint64_t false_negatives = 0;
    std::uint64_t labeled = 0;
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> false_positive_rate;
    std::vector<NodeId> flagged;
};

struct RouteMetrics {
    std::uint64_t discovered = 0;
    std::uint64_t via_adversary = 0;
    std::optional<double> fraction_via_adversary;
};

struct MetricsReport {
    std::string scenario;
    std::uint64_t seed = 0;
    std::string protocol;
    double duration_s = 0.0;
    double warmup_s = 0.0;
    std::uint64_t events = 0;
    std::vector<FlowMetrics> flows;
    std::map<std::string, std::uint64_t> control_tx;  // by packet type
    std::uint64_t control_overhead = 0;
    std::map<std::string, std::uint64_t> rejects;  // reject-* trace kinds
    std::map<std::string, std::uint64_t> drops;    // drop kinds and adversary/link/queue causes
    RouteMetrics routes;
    std::optional<DetectionMetrics> detection;
};

/// Counters only the runner can see (application sends, discovered routes).
struct RunCounters {
    std::map<std::int32_t, std::uint64_t> sent_after_warmup;
    RouteMetrics routes;
    std::uint64_t events = 0;
};

/// Metrics from a finished trace. `verdicts` may be empty when detection
/// did not run; `adversaries` is the ground truth.
MetricsReport compute_metrics(const ScenarioConfig& config, const engine::TraceLog& trace,
                              const std::vector<detection::Verdict>* verdicts, const RunCounters& counters);

struct RunOutput {
    engine::TraceLog trace;
    MetricsReport metrics;
    std::vector<detection::MonitorRound> last_rounds;  // final detection round
    std::vector<detection::Verdict> verdicts;
    bool overflow = false;
    NodeId flooding_node;      // set on overflow
    std::string failure;       // human-readable overflow report
};

/// Runs one scenario to its duration with `seed` (overrides the config's).
RunOutput run_scenario(const ScenarioConfig& config, std::optional<std::uint64_t> seed = std::nullopt);

/// Deterministic JSON rendering of a report.
std::string metrics_json(const MetricsReport& report);

/// Writes trace.csv, metrics.json and classification.csv into `dir`.
void write_outputs(const RunOutput& out, const std::filesystem::path& dir);

/// Aggregate over seeds: mean of each flow's PDR and of the detection rates.
struct SweepSummary {
    std::vector<std::uint64_t> seeds;
    std::vector<MetricsReport> reports;
    std::vector<std::uint64_t> overflowed;
};

SweepSummary run_sweep(const ScenarioConfig& config, std::uint64_t first_seed, std::uint64_t last_seed,
                       const std::filesystem::path* out_dir, unsigned threads = 0);
std::string sweep_json(const SweepSummary& summary);

}  // namespace meshsim::harness
