#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "meshsim/core/types.hpp"

namespace meshsim::engine {

struct NodePlacement {
    int id = 0;
    double x = 0.0;
    double y = 0.0;
    int mesh_group = 0;
};

struct LinkLoss {
    int a = 0;
    int b = 0;
    double loss = 0.0;
};

struct TopologyConfig {
    std::vector<NodePlacement> nodes;
    double radio_range = 0.0;
    double loss_prob = 0.0;
    std::vector<LinkLoss> link_loss;  // per-link overrides, symmetric
    SimTime hop_delay = SimTime::millis(1);
};

/// Static unit-disk topology. Node ids are dense 0..n-1.
class Topology {
public:
    Topology() = default;

    int size() const { return static_cast<int>(positions_.size()); }
    const std::vector<NodeId>& neighbors(NodeId n) const { return neighbors_.at(n.index()); }
    bool is_neighbor(NodeId a, NodeId b) const;
    double loss(NodeId a, NodeId b) const;
    SimTime hop_delay() const { return hop_delay_; }
    int mesh_group(NodeId n) const { return groups_.at(n.index()); }
    std::pair<double, double> position(NodeId n) const { return positions_.at(n.index()); }
    double radio_range() const { return range_; }

    /// Shortest hop distance, -1 when disconnected.
    int hop_distance(NodeId a, NodeId b) const { return hops_.at(a.index()).at(b.index()); }
    /// Largest finite hop distance over all pairs.
    int diameter() const { return diameter_; }
    const std::vector<std::string>& warnings() const { return warnings_; }

    friend Topology build_topology(const TopologyConfig& config);

private:
    std::vector<std::pair<double, double>> positions_;
    std::vector<int> groups_;
    std::vector<std::vector<NodeId>> neighbors_;
    std::map<std::pair<int, int>, double> link_loss_;
    std::vector<std::vector<int>> hops_;
    double default_loss_ = 0.0;
    double range_ = 0.0;
    SimTime hop_delay_;
    int diameter_ = 0;
    std::vector<std::string> warnings_;
};

/// Unit-disk neighbor sets (distance <= range). Throws std::invalid_argument
/// on duplicate or non-dense ids, non-finite coordinates, non-positive
/// range, or loss probabilities outside [0, 1]. Isolated nodes are reported
/// through warnings().
Topology build_topology(const TopologyConfig& config);

/// rows x cols grid, ids row-major.
std::vector<NodePlacement> grid_placement(int rows, int cols, double spacing);

}  // namespace meshsim::engine
