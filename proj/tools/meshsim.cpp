#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <regex>
#include <sstream>

#include "meshsim/harness/runner.hpp"

namespace fs = std::filesystem;
using namespace meshsim;

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 2;
constexpr int kOverflow = 3;

std::optional<harness::ScenarioConfig> load(const std::string& path) {
    auto r = harness::load_scenario(path);
    if (r.ok()) return r.config;
    for (const auto& e : r.errors) std::cerr << path << ": " << e << "\n";
    return std::nullopt;
}

int cmd_run(const std::string& scenario, std::optional<std::uint64_t> seed, const std::string& out) {
    auto cfg = load(scenario);
    if (!cfg) return kInvalid;
    const auto res = harness::run_scenario(*cfg, seed);
    harness::write_outputs(res, out);
    if (res.overflow) {
        std::cerr << "error: " << res.failure << "\n";
        return kOverflow;
    }
    for (const auto& f : res.metrics.flows) {
        std::cout << "flow " << f.id << ": sent " << f.sent << " delivered " << f.delivered << " pdr "
                  << (f.pdr ? std::to_string(*f.pdr) : "n/a") << "\n";
    }
    if (const auto& d = res.metrics.detection) {
        auto show = [](const std::optional<double>& v) { return v ? std::to_string(*v) : std::string("n/a"); };
        std::cout << "detection: precision " << show(d->precision) << " recall " << show(d->recall) << " fpr "
                  << show(d->false_positive_rate) << "\n";
    }
    std::cout << "wrote " << out << "\n";
    return kOk;
}

int cmd_detect(const std::string& trace_path, const std::string& params_path, const std::string& out) {
    detection::DetectionParams params;
    params.header_extensions = false;
    if (!params_path.empty()) {
        std::ifstream in(params_path);
        if (!in) {
            std::cerr << "cannot open " << params_path << "\n";
            return kInvalid;
        }
        std::stringstream ss;
        ss << in.rdbuf();
        const auto errors = harness::parse_detection_params(ss.str(), params);
        for (const auto& e : errors) std::cerr << params_path << ": " << e << "\n";
        if (!errors.empty()) return kInvalid;
    }
    std::ifstream in(trace_path);
    if (!in) {
        std::cerr << "cannot open " << trace_path << "\n";
        return kInvalid;
    }
    engine::TraceLog trace;
    try {
        trace = engine::TraceLog::read_csv(in);
    } catch (const std::exception& e) {
        std::cerr << trace_path << ": " << e.what() << "\n";
        return kInvalid;
    }
    const auto rounds = detection::detect_offline(trace, params);
    if (out.empty()) {
        detection::write_classification_csv(std::cout, rounds);
    } else {
        fs::create_directories(out);
        std::ofstream f(fs::path(out) / "classification.csv");
        detection::write_classification_csv(f, rounds);
    }
    for (const auto& v : detection::majority_vote(rounds)) {
        if (v.selfish) std::cerr << "selfish: node " << v.node.value() << " (" << v.selfish_votes << " of "
                                 << v.selfish_votes + v.cooperative_votes << " votes)\n";
    }
    return kOk;
}

int cmd_sweep(const std::string& scenario, const std::string& seeds, const std::string& out, unsigned threads) {
    static const std::regex range(R"((\d+)\.\.(\d+))");
    std::smatch m;
    if (!std::regex_match(seeds, m, range) || std::stoull(m[1]) > std::stoull(m[2])) {
        std::cerr << "--seeds: expected a..b with a <= b\n";
        return kInvalid;
    }
    auto cfg = load(scenario);
    if (!cfg) return kInvalid;
    const fs::path dir(out);
    const auto summary = harness::run_sweep(*cfg, std::stoull(m[1]), std::stoull(m[2]), &dir, threads);
    fs::create_directories(dir);
    std::ofstream(dir / "summary.json") << harness::sweep_json(summary);
    std::cout << "wrote " << summary.reports.size() << " runs to " << out << "\n";
    if (!summary.overflowed.empty()) {
        std::cerr << "error: event queue overflow for " << summary.overflowed.size() << " seed(s)\n";
        return kOverflow;
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Wireless mesh routing security simulator"};
    app.require_subcommand(1);

    std::string scenario, out, trace, params, seeds;
    std::optional<std::uint64_t> seed;
    unsigned threads = 0;

    auto* run = app.add_subcommand("run", "run one scenario");
    run->add_option("--scenario", scenario, "scenario JSON")->required()->check(CLI::ExistingFile);
    run->add_option("--seed", seed, "override the scenario seed");
    run->add_option("--out", out, "output directory")->required();

    auto* detect = app.add_subcommand("detect", "offline detection over a recorded trace");
    detect->add_option("--trace", trace, "trace.csv")->required()->check(CLI::ExistingFile);
    detect->add_option("--params", params, "detection parameters JSON")->check(CLI::ExistingFile);
    detect->add_option("--out", out, "write classification.csv here instead of stdout");

    auto* sweep = app.add_subcommand("sweep", "run a scenario over a range of seeds");
    sweep->add_option("--scenario", scenario, "scenario JSON")->required()->check(CLI::ExistingFile);
    sweep->add_option("--seeds", seeds, "inclusive range a..b")->required();
    sweep->add_option("--out", out, "output directory")->required();
    sweep->add_option("--threads", threads, "worker threads (0 = all cores)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kInvalid;
    }

    if (*run) return cmd_run(scenario, seed, out);
    if (*detect) return cmd_detect(trace, params, out);
    return cmd_sweep(scenario, seeds, out, threads);
}
