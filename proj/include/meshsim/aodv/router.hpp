#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <vector>

#include "meshsim/aodv/agent.hpp"
#include "meshsim/aodv/routing_table.hpp"
#include "meshsim/secure/secure.hpp"

namespace meshsim::aodv {

struct RouterParams {
    secure::Protocol protocol = secure::Protocol::Aodv;
    int ttl = 10;
    SimTime active_route_timeout = SimTime::seconds(10.0);
    SimTime jitter_lo = SimTime::millis(2);
    SimTime jitter_hi = SimTime::millis(5);
    int rreq_rate_limit = 10;  // originations per second
    bool intermediate_replies = true;  // plain AODV only
    bool header_extensions = false;
    /// Collect RREQ copies for `collect_window` and act on a random shortest one
    /// instead of the first (defeats the rushing race).
    bool randomized_forwarding = false;
    SimTime collect_window = SimTime::millis(8);
    SimTime discovery_timeout;  // 0: derived from ttl and per-hop latency
    int discovery_retries = 2;
    std::size_t buffer_limit = 64;
    SimTime rehello_interval = SimTime::seconds(1.0);
};

/// AODV with optional SAODV signatures / hash chains or SEAODV MACs.
class Router : public RoutingAgent {
public:
    Router(engine::Simulator& sim, NodeId self, RouterParams params, std::optional<adversary::AttackProfile> profile,
           const secure::KeyAuthority* authority);

    void start() override;
    void receive(const Packet& packet, NodeId transmitter, engine::RxMode mode) override;
    void send_data(const FlowSpec& flow, std::uint32_t seq) override;
    void originate_discovery(NodeId dest, bool force) override;
    std::optional<NodeId> next_hop(NodeId dest) override;

    RoutingTable& table() { return table_; }
    const RouterParams& params() const { return params_; }
    std::uint32_t own_seq() const { return own_seq_; }
    const secure::SeaodvKeys* keys() const { return keys_.get(); }
    secure::SeaodvKeys* keys() { return keys_.get(); }

    /// Sends the adversary's fabricated error message now.
    void fabricate_rerr();

    void handle_rreq(const Packet& packet, NodeId from);
    void handle_rrep(const Packet& packet, NodeId from);
    void handle_rerr(const Packet& packet, NodeId from);
    void forward_data(const Packet& packet);

private:
    struct FloodState {
        int copies = 0;
        bool collecting = false;
        std::vector<std::pair<Packet, NodeId>> collected;
    };
    struct Discovery {
        int attempts = 0;
        std::uint64_t generation = 0;
    };

    void process_rreq(const Packet& packet, NodeId from);
    void reply_as_destination(const Rreq& rreq, NodeId from);
    void send(Packet packet, NodeId next_hop, bool relay, bool keep_sender = false);
    void emit_rreq(NodeId dest);
    void start_discovery(NodeId dest);
    void discovery_timeout(NodeId dest, std::uint64_t generation);
    void flush_buffer(NodeId dest);
    void buffer(const Data& d);
    void send_rerr(std::vector<Unreachable> unreachable);
    void handle_hello(const Packet& packet, NodeId from, engine::RxMode mode);
    bool verify(const Packet& packet);
    SimTime jitter();
    SimTime discovery_wait() const;
    bool is_adversary(adversary::Kind k) const { return profile_ && profile_->kind == k; }

    RouterParams params_;
    const secure::KeyAuthority* authority_;
    std::unique_ptr<secure::SeaodvKeys> keys_;
    RoutingTable table_;
    std::uint32_t own_seq_ = 0;
    std::uint32_t bcast_id_ = 0;
    std::map<std::pair<NodeId, std::uint32_t>, FloodState> floods_;
    std::map<NodeId, Discovery> discoveries_;
    std::map<NodeId, std::deque<Data>> buffers_;
    std::deque<SimTime> recent_originations_;
    std::map<NodeId, SimTime> last_rehello_;
    std::set<NodeId> deferred_;
    int chain_length_ = 0;
};

}  // namespace meshsim::aodv
