#include "meshsim/qos/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace meshsim::qos {

double update_reliability(double r_prev, double n_t, double alpha) {
    return std::clamp(alpha * n_t + (1.0 - alpha) * r_prev, 0.0, 1.0);
}

bool reliability_gate(std::optional<double> r, double threshold) { return r && *r > threshold; }

double path_reliability(std::span<const double> links) {
    if (links.empty()) return 0.0;
    return std::accumulate(links.begin(), links.end(), 0.0) / static_cast<double>(links.size());
}

std::set<NodeId> selective_flood_scope(NodeId src, NodeId dest, const engine::Topology& topology) {
    const int gs = topology.mesh_group(src);
    const int gd = topology.mesh_group(dest);
    std::set<NodeId> scope;
    for (int i = 0; i < topology.size(); ++i) {
        const int g = topology.mesh_group(NodeId(i));
        if (g == gs || g == gd) scope.insert(NodeId(i));
    }
    return scope;
}

std::optional<CongestionEstimate> estimate_congestion_loss(std::span<const LinkObservation> observations) {
    if (observations.empty()) return std::nullopt;
    CongestionEstimate e;
    e.expected = 1;
    for (std::size_t i = 1; i < observations.size(); ++i) {
        const auto prev = observations[i - 1].seq;
        const auto cur = observations[i].seq;
        if (cur <= prev) continue;
        const std::uint64_t gap = cur - prev - 1;
        const std::uint64_t wireless = std::min<std::uint64_t>(gap, static_cast<std::uint64_t>(std::max(0, observations[i].flagged_failures)));
        e.wireless += wireless;
        e.congestion += gap - wireless;
        e.expected += gap + 1;
    }
    return e;
}

void CongestionEstimator::receive(std::uint32_t seq) {
    ++received_;
    if (!last_) {
        last_ = seq;
        totals_.expected = 1;
        pending_flags_ = 0;
        return;
    }
    if (seq > *last_) {
        const std::uint64_t gap = seq - *last_ - 1;
        const std::uint64_t wireless = std::min<std::uint64_t>(gap, static_cast<std::uint64_t>(pending_flags_));
        totals_.wireless += wireless;
        totals_.congestion += gap - wireless;
        totals_.expected += gap + 1;
        last_ = seq;
    }
    pending_flags_ = 0;
}

std::optional<double> CongestionEstimator::p_congestion() const {
    if (totals_.expected == 0) return std::nullopt;
    return totals_.p();
}

void CongestionEstimator::reset() { *this = CongestionEstimator{}; }

RttStats rtt_stats(std::span<const double> samples) {
    RttStats s;
    s.samples = samples.size();
    if (samples.empty()) return s;
    s.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(samples.size());
    double dev = 0.0;
    for (double x : samples) dev += std::abs(x - s.mean);
    s.mad = dev / static_cast<double>(samples.size());
    return s;
}

double rto(double mean_rtt, double deviation, double k) { return mean_rtt + k * deviation; }

double estimate_bandwidth(double packet_size, double rtt, double rto_value, double p, double capacity) {
    if (!(p > 0.0)) return capacity;
    const double x = rtt * std::sqrt(2.0 * p / 3.0);
    const double y = rto_value * std::min(1.0, 3.0 * std::sqrt(3.0 * p / 8.0)) * p * (1.0 + 32.0 * p * p);
    return packet_size / (x + y);
}

}  // namespace meshsim::qos
