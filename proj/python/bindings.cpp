#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <filesystem>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "meshsim/crypto/blom.hpp"
#include "meshsim/harness/runner.hpp"
#include "meshsim/qos/estimators.hpp"
#include "meshsim/stats/stats.hpp"

namespace py = pybind11;
using namespace meshsim;

namespace {

harness::ScenarioConfig parse_or_throw(const std::string& text) {
    auto r = harness::parse_scenario(text);
    if (!r.ok()) {
        std::string msg = "invalid scenario:";
        for (const auto& e : r.errors) msg += "\n  " + e;
        throw py::value_error(msg);
    }
    return *r.config;
}

std::string trace_text(const engine::TraceLog& t) {
    std::ostringstream out;
    t.write_csv(out);
    return out.str();
}

stats::CountMatrix to_matrix(const std::vector<std::vector<std::int64_t>>& rows) {
    stats::CountMatrix m(static_cast<int>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows.size()) throw py::value_error("transition matrices must be square");
        for (std::size_t j = 0; j < rows.size(); ++j) m.at(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
    }
    return m;
}

}  // namespace

PYBIND11_MODULE(_meshsim, m) {
    m.doc() = "Mesh routing security simulator core";

    m.def("validate_scenario", [](const std::string& text) { return harness::parse_scenario(text).errors; },
          py::arg("scenario_json"), "Every validation error of a scenario document (empty when valid).");

    m.def(
        "run_scenario",
        [](const std::string& text, std::optional<std::uint64_t> seed, std::optional<std::string> out_dir) {
            const auto cfg = parse_or_throw(text);
            harness::RunOutput out;
            {
                py::gil_scoped_release release;
                out = harness::run_scenario(cfg, seed);
            }
            if (out_dir) harness::write_outputs(out, *out_dir);
            std::ostringstream cls;
            detection::write_classification_csv(cls, out.last_rounds);
            py::dict d;
            d["metrics_json"] = harness::metrics_json(out.metrics);
            d["trace_csv"] = trace_text(out.trace);
            d["classification_csv"] = cls.str();
            d["overflow"] = out.overflow;
            d["failure"] = out.failure;
            return d;
        },
        py::arg("scenario_json"), py::arg("seed") = py::none(), py::arg("out_dir") = py::none());

    m.def(
        "run_sweep",
        [](const std::string& text, std::uint64_t first, std::uint64_t last, std::optional<std::string> out_dir, unsigned threads) {
            const auto cfg = parse_or_throw(text);
            std::filesystem::path dir = out_dir.value_or("");
            py::gil_scoped_release release;
            const auto s = harness::run_sweep(cfg, first, last, out_dir ? &dir : nullptr, threads);
            return harness::sweep_json(s);
        },
        py::arg("scenario_json"), py::arg("first_seed"), py::arg("last_seed"), py::arg("out_dir") = py::none(),
        py::arg("threads") = 0);

    m.def(
        "detect_trace",
        [](const std::string& trace_csv, std::optional<std::string> params_json) {
            detection::DetectionParams p;
            p.header_extensions = false;
            if (params_json) {
                const auto errors = harness::parse_detection_params(*params_json, p);
                if (!errors.empty()) throw py::value_error(errors.front());
            }
            std::istringstream in(trace_csv);
            const auto trace = engine::TraceLog::read_csv(in);
            const auto rounds = detection::detect_offline(trace, p);
            std::ostringstream out;
            detection::write_classification_csv(out, rounds);
            return out.str();
        },
        py::arg("trace_csv"), py::arg("params_json") = py::none(), "Offline detection over a trace; returns classification CSV.");

    m.def(
        "blom_pairwise_key",
        [](const std::vector<std::uint64_t>& row, const std::vector<std::uint64_t>& column, std::uint64_t q) {
            if (row.size() != column.size()) throw py::value_error("row and column lengths differ");
            return crypto::blom_pairwise_key(row, column, q);
        },
        py::arg("row"), py::arg("column"), py::arg("q"));
    m.def("blom_keys", [](std::uint64_t seed, int n, int t, std::uint64_t q) {
        Rng rng(seed);
        const auto s = crypto::blom_setup(rng, n, t, q);
        std::vector<std::vector<std::uint64_t>> k(static_cast<std::size_t>(n), std::vector<std::uint64_t>(static_cast<std::size_t>(n), 0));
        for (int i = 1; i <= n; ++i) {
            for (int j = 1; j <= n; ++j) {
                if (i != j) k[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j - 1)] =
                    crypto::blom_pairwise_key(s.rows[static_cast<std::size_t>(i - 1)].row, s.pub.column(j), q);
            }
        }
        return k;
    }, py::arg("seed"), py::arg("n"), py::arg("t"), py::arg("q"), "Pairwise key matrix of one random Blom setup.");

    m.def("update_reliability", &qos::update_reliability, py::arg("r_prev"), py::arg("n_t"), py::arg("alpha") = qos::kDefaultAlpha);
    m.def("estimate_bandwidth", &qos::estimate_bandwidth, py::arg("packet_size"), py::arg("rtt"), py::arg("rto"),
          py::arg("p_congestion"), py::arg("capacity") = qos::kDefaultCapacityBps);

    m.def(
        "chi2_row_test",
        [](const std::vector<std::int64_t>& r, const std::vector<std::int64_t>& s, double alpha) {
            const auto res = stats::chi2_row_test(r, s, alpha);
            return py::make_tuple(res.statistic, res.reject);
        },
        py::arg("row_r"), py::arg("row_s"), py::arg("alpha"));

    m.def(
        "classify",
        [](const std::vector<std::vector<std::vector<std::int64_t>>>& matrices, double alpha, double beta, int k_max,
           const std::string& anova) {
            std::vector<stats::CountMatrix> ms;
            for (const auto& rows : matrices) ms.push_back(to_matrix(rows));
            stats::ClassifyParams p;
            p.alpha = alpha;
            p.beta = beta;
            p.k_max = k_max;
            const auto method = stats::anova_method_from_string(anova);
            if (!method) throw py::value_error("anova must be 'permutation' or 'f_test'");
            p.anova = *method;
            const auto c = stats::classify(ms, p);
            std::vector<std::string> labels;
            for (auto l : c.labels) labels.push_back(stats::to_string(l));
            py::dict d;
            d["labels"] = labels;
            d["scores"] = c.scores;
            d["k"] = c.k;
            d["p_k"] = c.p_k;
            return d;
        },
        py::arg("matrices"), py::arg("alpha") = 0.05, py::arg("beta") = 0.05, py::arg("k_max") = 4,
        py::arg("anova") = "permutation");
}
