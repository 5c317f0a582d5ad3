#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "meshsim/adversary/profile.hpp"
#include "meshsim/aodv/agent.hpp"
#include "meshsim/aodv/router.hpp"
#include "meshsim/detection/monitor.hpp"
#include "meshsim/engine/simulator.hpp"
#include "meshsim/engine/topology.hpp"
#include "meshsim/qos/qos_router.hpp"
#include "meshsim/secure/secure.hpp"

namespace meshsim::harness {

/// Route discoveries issued independently of data flows.
struct DiscoveryWorkload {
    int count = 0;
    SimTime start = SimTime::seconds(1.0);
    SimTime interval = SimTime::millis(250);
    /// Cycled in order; random distinct pairs from the workload stream when empty.
    std::vector<std::pair<NodeId, NodeId>> pairs;
};

struct DetectionConfig {
    bool enabled = false;
    bool feed_routing = true;  // pass each monitor's verdicts to its own router
    detection::DetectionParams params;
    bool timeouts_given = false;
};

struct ScenarioConfig {
    std::string name = "scenario";
    std::uint64_t seed = 1;
    SimTime duration = SimTime::seconds(60);
    std::optional<SimTime> warmup;  // default: first detection window
    secure::Protocol protocol = secure::Protocol::Aodv;
    engine::TopologyConfig topology;
    engine::EngineConfig engine;
    aodv::RouterParams routing;
    qos::QosParams qos;
    secure::CryptoParams crypto;
    std::vector<aodv::FlowSpec> flows;
    DiscoveryWorkload discoveries;
    adversary::ProfileMap adversaries;
    DetectionConfig detection;

    int node_count() const { return static_cast<int>(topology.nodes.size()); }
    SimTime effective_warmup() const;
};

struct LoadResult {
    std::optional<ScenarioConfig> config;
    std::vector<std::string> errors;
    bool ok() const { return config.has_value() && errors.empty(); }
};

/// Parses and validates a scenario document; every problem found is reported.
LoadResult parse_scenario(const std::string& json_text);
LoadResult load_scenario(const std::filesystem::path& path);

/// Semantic checks on an assembled config (also run by the loaders).
std::vector<std::string> validate_scenario(const ScenarioConfig& config);

/// Detection parameters from a JSON document: either a bare detection block
/// or a whole scenario. `out` is only updated when there are no errors.
std::vector<std::string> parse_detection_params(const std::string& json_text, detection::DetectionParams& out);

}  // namespace meshsim::harness
