#include "meshsim/engine/topology.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>
#include <stdexcept>

namespace meshsim::engine {

namespace {

std::pair<int, int> ordered(int a, int b) { return a < b ? std::pair{a, b} : std::pair{b, a}; }

}  // namespace

bool Topology::is_neighbor(NodeId a, NodeId b) const {
    if (!a.valid() || !b.valid() || a.value() >= size() || b.value() >= size()) return false;
    const auto& n = neighbors_[a.index()];
    return std::binary_search(n.begin(), n.end(), b);
}

double Topology::loss(NodeId a, NodeId b) const {
    auto it = link_loss_.find(ordered(a.value(), b.value()));
    return it == link_loss_.end() ? default_loss_ : it->second;
}

Topology build_topology(const TopologyConfig& config) {
    if (!(config.radio_range > 0.0) || !std::isfinite(config.radio_range)) throw std::invalid_argument("radio_range must be positive");
    if (!(config.loss_prob >= 0.0 && config.loss_prob <= 1.0)) throw std::invalid_argument("loss_prob must lie in [0, 1]");
    if (config.hop_delay < SimTime(0)) throw std::invalid_argument("hop delay must be non-negative");

    const int n = static_cast<int>(config.nodes.size());
    std::set<int> seen;
    for (const auto& p : config.nodes) {
        if (!seen.insert(p.id).second) throw std::invalid_argument("duplicate node id " + std::to_string(p.id));
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw std::invalid_argument("non-finite position for node " + std::to_string(p.id));
    }
    if (!seen.empty() && (*seen.begin() != 0 || *seen.rbegin() != n - 1)) throw std::invalid_argument("node ids must be 0..n-1");

    Topology topo;
    topo.positions_.resize(static_cast<std::size_t>(n));
    topo.groups_.resize(static_cast<std::size_t>(n));
    for (const auto& p : config.nodes) {
        topo.positions_[static_cast<std::size_t>(p.id)] = {p.x, p.y};
        topo.groups_[static_cast<std::size_t>(p.id)] = p.mesh_group;
    }
    topo.range_ = config.radio_range;
    topo.default_loss_ = config.loss_prob;
    topo.hop_delay_ = config.hop_delay;
    for (const auto& l : config.link_loss) {
        if (l.a < 0 || l.a >= n || l.b < 0 || l.b >= n || l.a == l.b) throw std::invalid_argument("link loss references unknown link");
        if (!(l.loss >= 0.0 && l.loss <= 1.0)) throw std::invalid_argument("link loss must lie in [0, 1]");
        topo.link_loss_[ordered(l.a, l.b)] = l.loss;
    }

    topo.neighbors_.assign(static_cast<std::size_t>(n), {});
    for (int a = 0; a < n; ++a) {
        for (int b = a + 1; b < n; ++b) {
            const auto [xa, ya] = topo.positions_[static_cast<std::size_t>(a)];
            const auto [xb, yb] = topo.positions_[static_cast<std::size_t>(b)];
            if (std::hypot(xa - xb, ya - yb) <= config.radio_range) {
                topo.neighbors_[static_cast<std::size_t>(a)].push_back(NodeId(b));
                topo.neighbors_[static_cast<std::size_t>(b)].push_back(NodeId(a));
            }
        }
    }
    for (auto& nb : topo.neighbors_) std::sort(nb.begin(), nb.end());

    topo.hops_.assign(static_cast<std::size_t>(n), std::vector<int>(static_cast<std::size_t>(n), -1));
    for (int s = 0; s < n; ++s) {
        auto& dist = topo.hops_[static_cast<std::size_t>(s)];
        std::deque<int> queue{s};
        dist[static_cast<std::size_t>(s)] = 0;
        while (!queue.empty()) {
            const int u = queue.front();
            queue.pop_front();
            for (NodeId v : topo.neighbors_[static_cast<std::size_t>(u)]) {
                if (dist[v.index()] < 0) {
                    dist[v.index()] = dist[static_cast<std::size_t>(u)] + 1;
                    topo.diameter_ = std::max(topo.diameter_, dist[v.index()]);
                    queue.push_back(v.value());
                }
            }
        }
    }
    for (int i = 0; i < n; ++i) {
        if (n > 1 && topo.neighbors_[static_cast<std::size_t>(i)].empty()) topo.warnings_.push_back("node " + std::to_string(i) + " is isolated");
    }
    return topo;
}

std::vector<NodePlacement> grid_placement(int rows, int cols, double spacing) {
    if (rows < 1 || cols < 1) throw std::invalid_argument("grid needs at least one row and column");
    std::vector<NodePlacement> out;
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) out.push_back({r * cols + c, c * spacing, r * spacing, 0});
    }
    return out;
}

}  // namespace meshsim::engine
