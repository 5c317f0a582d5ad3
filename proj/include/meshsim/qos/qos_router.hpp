#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <tuple>
#include <vector>

#include "meshsim/aodv/agent.hpp"
#include "meshsim/qos/estimators.hpp"

namespace meshsim::qos {

struct QosParams {
    int ttl = 10;
    SimTime jitter_lo = SimTime::millis(2);
    SimTime jitter_hi = SimTime::millis(5);
    SimTime interval = SimTime::seconds(1.0);  // reliability measurement interval
    double alpha = kDefaultAlpha;
    double gate = kGateThreshold;
    SimTime expect_grace = SimTime::millis(50);  // time a neighbor has to rebroadcast
    bool selective_flooding = true;
    int candidate_cap = 3;        // replies the destination sends per discovery
    double probe_timer_factor = 3.0;  // x H x hop delay after the last probe
    SimTime discovery_wait = SimTime::millis(300);
    SimTime retry_after = SimTime::seconds(1.0);
    SimTime reservation_timeout = SimTime::seconds(2.0);
    std::size_t buffer_limit = 64;
    std::size_t delay_window = 10;   // deliveries averaged for the delay check
    std::size_t bandwidth_window = 20;  // receptions before the bandwidth check
    SimTime violation_holdoff = SimTime::seconds(1.0);
    double capacity_Bps = kDefaultCapacityBps;
};

/// QoS-aware routing: reliability-gated selective flooding, probe-based
/// admission along candidate paths, and violation recovery.
class QosRouter : public aodv::RoutingAgent {
public:
    QosRouter(engine::Simulator& sim, NodeId self, QosParams params, std::optional<adversary::AttackProfile> profile);

    void start() override;
    void receive(const aodv::Packet& packet, NodeId transmitter, engine::RxMode mode) override;
    void radio_loss(const aodv::Packet& packet, NodeId transmitter) override;
    void send_data(const aodv::FlowSpec& flow, std::uint32_t seq) override;
    void originate_discovery(NodeId dest, bool force) override;
    void apply_detection(const std::map<NodeId, bool>& selfish) override;
    std::optional<NodeId> next_hop(NodeId dest) override;

    /// Makes a flow's QoS contract known to this node (relays need B_min).
    void register_flow(const aodv::FlowSpec& flow) { contracts_[flow.id] = flow; }

    std::optional<double> reliability(NodeId neighbor) const;
    bool gate(NodeId neighbor) const;
    const QosParams& params() const { return params_; }
    /// Admitted path of a flow sourced here.
    std::optional<std::vector<NodeId>> admitted_path(std::int32_t flow) const;
    std::uint64_t probes_sent() const { return probes_sent_; }
    std::uint64_t admissions() const { return admissions_; }
    std::uint64_t rejections() const { return rejections_; }

private:
    enum class Phase { Idle, Discovering, Probing, Admitted };

    struct SourceFlow {
        aodv::FlowSpec spec;
        Phase phase = Phase::Idle;
        std::uint32_t attempt = 0;       // bcast id of the current discovery
        std::uint32_t probe_round = 0;   // increments per probed candidate
        std::deque<std::vector<NodeId>> candidates;
        std::vector<NodeId> probing;
        std::vector<NodeId> path;
        bool rerouting = false;
        std::deque<aodv::Data> buffer;
        std::uint64_t timer_gen = 0;
    };
    struct FlowEntry {
        NodeId next_hop;
        NodeId dest;
        SimTime expires;
    };
    struct DestFlow {
        std::map<std::uint32_t, std::vector<double>> probe_delays;  // by probe round
        std::map<std::uint32_t, std::uint64_t> report_gen;
        std::set<std::uint32_t> reported;
        std::deque<double> recent_delays;
        SimTime last_reroute = SimTime(-1);
        std::uint32_t reroute_counter = 0;
    };
    struct LinkState {
        CongestionEstimator congestion;
        std::deque<double> rtts;
        std::uint64_t since_check = 0;
        SimTime last_report = SimTime(-1);
    };
    struct Flood {
        std::set<NodeId> transmitted;  // neighbors heard sending a copy
        int copies = 0;
        int replies = 0;
    };

    SimTime jitter();
    void note_neighbor(NodeId n);
    void end_interval();
    void expect_rebroadcast(std::pair<NodeId, std::uint32_t> key, NodeId dest, int ttl_out);
    bool in_scope(NodeId src, NodeId dest) const;

    void handle_rreq(const aodv::Packet& p, NodeId from);
    void handle_rrep(const aodv::Packet& p, NodeId from);
    void handle_rerr(const aodv::Packet& p, NodeId from);
    void handle_probe(const aodv::Packet& p, NodeId from);
    void handle_data(const aodv::Packet& p, NodeId from);

    void start_discovery(std::int32_t flow);
    void on_candidate(SourceFlow& f, std::vector<NodeId> path);
    void probe_next(std::int32_t flow);
    void finish_probe(std::int32_t flow, std::uint32_t round, std::optional<double> avg_delay);
    void admit(SourceFlow& f, std::vector<NodeId> path);
    void reject(std::int32_t flow);
    void send_report(std::int32_t flow, std::uint32_t round, std::vector<NodeId> route);
    void send_rerr_to_source(std::int32_t flow, NodeId source, std::vector<NodeId> back_route, aodv::RerrReason reason);
    void check_bandwidth(NodeId from, const aodv::Data& d);
    void check_delay(const aodv::Data& d, SimTime latency);
    void forward_along(aodv::Packet p, const std::vector<NodeId>& route, bool reverse, bool relay);
    void send(aodv::Packet p, NodeId next_hop, bool relay = false);
    void send_data_packet(aodv::Data d, NodeId next_hop);
    void install_flow(std::int32_t flow, NodeId dest, NodeId next_hop);

    QosParams params_;
    std::map<NodeId, double> r_;
    std::map<NodeId, std::pair<int, int>> window_;  // neighbor -> (observed, expected)
    std::set<NodeId> excluded_;
    std::map<std::pair<NodeId, std::uint32_t>, Flood> floods_;
    std::map<std::tuple<NodeId, std::int32_t, std::uint32_t>, bool> reroute_seen_;
    std::uint32_t bcast_id_ = 0;
    std::uint32_t own_seq_ = 0;
    std::map<std::int32_t, SourceFlow> flows_;
    std::map<std::int32_t, aodv::FlowSpec> contracts_;
    std::map<std::int32_t, FlowEntry> flow_table_;
    std::map<std::int32_t, DestFlow> dest_flows_;
    std::map<NodeId, LinkState> links_;
    std::map<NodeId, std::uint32_t> link_seq_out_;
    std::uint64_t probes_sent_ = 0;
    std::uint64_t admissions_ = 0;
    std::uint64_t rejections_ = 0;
};

}  // namespace meshsim::qos
