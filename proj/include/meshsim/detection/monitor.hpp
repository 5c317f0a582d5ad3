#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "meshsim/aodv/packet.hpp"
#include "meshsim/core/types.hpp"
#include "meshsim/engine/simulator.hpp"
#include "meshsim/stats/count_matrix.hpp"
#include "meshsim/stats/stats.hpp"

namespace meshsim::detection {

/// FSM states of a monitored neighbor within one LMU.
enum class FsmState : std::uint8_t {
    Init = 1,
    UnexpectedRrep = 2,
    RcvdRreq = 3,
    FwdRreq = 4,
    TimeoutRreq = 5,
    RcvdRrep = 6,
    Complete = 7,
    TimeoutRrep = 8,
};

inline constexpr int kStates = 8;

bool is_final(FsmState s);
/// True for the state pairs the FSM can record.
bool is_edge(FsmState from, FsmState to);

struct Transition {
    SimTime time;
    FsmState from;
    FsmState to;
};

struct DetectionParams {
    SimTime window_period = SimTime::seconds(10);  // W
    int window_multiple = 3;                       // d, so D = d * W
    double alpha = 0.05;
    double beta = 0.05;
    int k_max = 4;
    int resamples = 10000;
    std::uint64_t anova_seed = 0x5eed;
    stats::AnovaMethod anova = stats::AnovaMethod::Permutation;
    SimTime rreq_timeout = SimTime::millis(200);
    SimTime rrep_timeout = SimTime::millis(200);
    bool header_extensions = true;  // use next_to_source cross-checks

    SimTime window() const { return window_period * window_multiple; }
    stats::ClassifyParams classify_params() const;
    /// Range checks; returns the problems found.
    std::vector<std::string> validate() const;
};

/// One frame as seen by a monitor: its own transmission or one it heard.
struct Observation {
    SimTime time;
    NodeId transmitter;
    NodeId addressee;  // -1 for broadcast
    aodv::PacketType type = aodv::PacketType::Rreq;
    aodv::LmuKey key;
    NodeId next_to_source;  // RREQ header extension, -1 when absent
};

/// Per-neighbor transition matrices for one detection round.
struct Snapshot {
    std::vector<NodeId> neighbors;                 // neighbors with data, in id order
    std::vector<stats::CountMatrix> matrices;      // parallel to neighbors
    std::vector<NodeId> insufficient;              // neighbors with no transitions in the window
};

/// Route-discovery monitor run by one node over its one-hop neighbors.
class Monitor {
public:
    Monitor(NodeId self, std::vector<NodeId> neighbors, DetectionParams params);

    NodeId self() const { return self_; }
    const std::vector<NodeId>& neighbors() const { return neighbors_; }
    const DetectionParams& params() const { return params_; }

    /// Feeds one observation; timeouts up to its time are processed first.
    void observe(const Observation& obs);
    /// Fires every timeout due at or before `now`.
    void advance(SimTime now);
    /// Transitions of closed LMUs time-stamped in (now - D, now].
    Snapshot snapshot(SimTime now) const;

    /// Recorded transitions per neighbor, from closed LMUs only.
    const std::map<NodeId, std::vector<Transition>>& history() const { return history_; }
    FsmState state(NodeId neighbor, aodv::LmuKey key) const;
    /// LMUs that saw only an unexpected RREP and expired without further edges.
    std::uint64_t discarded_unexpected() const { return discarded_unexpected_; }

private:
    struct Lmu {
        FsmState state = FsmState::Init;
        SimTime deadline = SimTime::max();
        std::vector<Transition> path;
    };
    enum class Event { MonitorRreq, NeighborRreq, NeighborGetsRrep, NeighborSendsRrep };

    void apply(NodeId neighbor, aodv::LmuKey key, Event ev, SimTime at);
    void move(NodeId neighbor, aodv::LmuKey key, Lmu& lmu, FsmState to, SimTime at);
    void close(NodeId neighbor, aodv::LmuKey key);
    bool watches(NodeId n) const { return watched_.count(n) > 0; }

    NodeId self_;
    std::vector<NodeId> neighbors_;
    std::set<NodeId> watched_;
    DetectionParams params_;
    std::map<std::pair<NodeId, aodv::LmuKey>, Lmu> open_;
    std::map<NodeId, std::vector<Transition>> history_;
    std::uint64_t discarded_unexpected_ = 0;
};

/// Observation of a live frame from `observer`'s point of view, if it is a
/// route-discovery message.
std::optional<Observation> observation_of(const engine::Frame& frame);

/// Rebuilds per-monitor observations from a recorded trace. Neighbor sets
/// are inferred from who heard whom. Overheard unicasts are matched to the
/// transmitter's latest tx row with the same type and key to recover the
/// addressee. Header extensions are not part of the CSV, so replay runs
/// without the next_to_source cross-check.
struct ReplayInput {
    std::map<NodeId, std::vector<NodeId>> neighbors;
    std::map<NodeId, std::vector<Observation>> observations;
    SimTime end;
};
ReplayInput replay_input(const engine::TraceLog& trace);

/// Network-wide verdict for one node.
struct Verdict {
    NodeId node;
    int selfish_votes = 0;
    int cooperative_votes = 0;
    int unknown_votes = 0;
    bool selfish = false;  // strict majority of decided monitors
};

/// Result of one monitor's classification round.
struct MonitorRound {
    NodeId monitor;
    std::vector<NodeId> neighbors;
    stats::Classification classification;
};

MonitorRound classify_round(const Monitor& monitor, SimTime now);
std::vector<Verdict> majority_vote(const std::vector<MonitorRound>& rounds);

/// Rows `monitor,neighbor,label,C_r,P_k,k`.
void write_classification_csv(std::ostream& out, const std::vector<MonitorRound>& rounds);

/// Offline detection over a trace: feeds every monitor, then classifies once
/// at the end of the trace.
std::vector<MonitorRound> detect_offline(const engine::TraceLog& trace, const DetectionParams& params);

}  // namespace meshsim::detection
