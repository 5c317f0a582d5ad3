#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "meshsim/core/types.hpp"
#include "meshsim/engine/topology.hpp"

namespace meshsim::qos {

inline constexpr double kDefaultAlpha = 0.5;
inline constexpr double kGateThreshold = 0.5;
inline constexpr double kDefaultCapacityBps = 1.25e6;

/// EWMA link reliability: alpha * n_t + (1 - alpha) * r_prev.
double update_reliability(double r_prev, double n_t, double alpha = kDefaultAlpha);

/// True iff the reliability is strictly above the threshold.
bool reliability_gate(std::optional<double> r, double threshold = kGateThreshold);

/// Mean link reliability along a path; 0 for an empty path.
double path_reliability(std::span<const double> links);

/// Nodes allowed to carry a flood between `src` and `dest`: the union of
/// their mesh groups.
std::set<NodeId> selective_flood_scope(NodeId src, NodeId dest, const engine::Topology& topology);

/// One received frame on a link: its link sequence number and how many
/// reassembly failures the link layer flagged since the previous reception.
struct LinkObservation {
    std::uint32_t seq = 0;
    int flagged_failures = 0;
};

struct CongestionEstimate {
    std::uint64_t expected = 0;
    std::uint64_t wireless = 0;
    std::uint64_t congestion = 0;
    double p() const { return expected == 0 ? 0.0 : static_cast<double>(congestion) / static_cast<double>(expected); }
};

/// Classifies sequence gaps: gaps covered by flagged reassembly failures
/// are wireless losses, the rest congestion. Empty input has no sample.
std::optional<CongestionEstimate> estimate_congestion_loss(std::span<const LinkObservation> observations);

/// Streaming form of the same classification for one incoming link.
class CongestionEstimator {
public:
    void flag_failure() { ++pending_flags_; }
    void receive(std::uint32_t seq);
    std::optional<double> p_congestion() const;
    std::uint64_t received() const { return received_; }
    void reset();

private:
    std::optional<std::uint32_t> last_;
    int pending_flags_ = 0;
    std::uint64_t received_ = 0;
    CongestionEstimate totals_;
};

struct RttStats {
    double mean = 0.0;
    double mad = 0.0;  // mean absolute deviation
    std::size_t samples = 0;
};

RttStats rtt_stats(std::span<const double> samples);

/// mean + k * deviation.
double rto(double mean_rtt, double deviation, double k = 4.0);

/// Available bandwidth estrat = size / (X + Y) with X = RTT sqrt(2p/3)
/// and Y = RTO min(1, 3 sqrt(3p/8)) p (1 + 32 p^2). p = 0 returns the
/// capacity cap.
double estimate_bandwidth(double packet_size, double rtt, double rto_value, double p_congestion,
                          double capacity = kDefaultCapacityBps);

}  // namespace meshsim::qos
