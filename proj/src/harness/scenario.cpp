#include "meshsim/harness/scenario.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "meshsim/crypto/blom.hpp"

namespace meshsim::harness {

using nlohmann::json;

namespace {

// Typed field access that records problems instead of throwing.
class Reader {
public:
    explicit Reader(std::vector<std::string>& errors) : errors_(errors) {}

    void error(const std::string& path, const std::string& what) { errors_.push_back(path + ": " + what); }

    const json* object(const json& parent, const std::string& key, const std::string& path) {
        if (!parent.contains(key)) return nullptr;
        const auto& v = parent.at(key);
        if (!v.is_object()) {
            error(path + key, "expected an object");
            return nullptr;
        }
        return &v;
    }

    void known_keys(const json& obj, std::initializer_list<const char*> keys, const std::string& path) {
        std::set<std::string> allowed(keys.begin(), keys.end());
        for (const auto& [k, v] : obj.items()) {
            if (!allowed.count(k)) error(path + k, "unknown key");
        }
    }

    template <class T>
    void number(const json& obj, const std::string& key, T& out, const std::string& path) {
        if (!obj.contains(key)) return;
        const auto& v = obj.at(key);
        if (!v.is_number()) {
            error(path + key, "expected a number");
            return;
        }
        if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer()) {
                error(path + key, "expected an integer");
                return;
            }
            if constexpr (std::is_unsigned_v<T>) {
                if (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0) {
                    error(path + key, "must be non-negative");
                    return;
                }
            }
        }
        out = v.get<T>();
    }

    void seconds(const json& obj, const std::string& key, SimTime& out, const std::string& path) {
        double s = out.to_seconds();
        const bool had = obj.contains(key);
        number(obj, key, s, path);
        if (had) out = SimTime::seconds(s);
    }

    void millis(const json& obj, const std::string& key, SimTime& out, const std::string& path) {
        double ms = out.to_millis();
        const bool had = obj.contains(key);
        number(obj, key, ms, path);
        if (had) out = SimTime::millis(ms);
    }

    void boolean(const json& obj, const std::string& key, bool& out, const std::string& path) {
        if (!obj.contains(key)) return;
        if (!obj.at(key).is_boolean()) {
            error(path + key, "expected true or false");
            return;
        }
        out = obj.at(key).get<bool>();
    }

    void string(const json& obj, const std::string& key, std::string& out, const std::string& path) {
        if (!obj.contains(key)) return;
        if (!obj.at(key).is_string()) {
            error(path + key, "expected a string");
            return;
        }
        out = obj.at(key).get<std::string>();
    }

    NodeId node(const json& v, const std::string& path) {
        if (!v.is_number_integer()) {
            error(path, "expected a node id");
            return NodeId::none();
        }
        return NodeId(v.get<int>());
    }

private:
    std::vector<std::string>& errors_;
};

int node_from_key(const std::string& key, Reader& rd, const std::string& path) {
    try {
        std::size_t pos = 0;
        const int id = std::stoi(key, &pos);
        if (pos == key.size()) return id;
    } catch (const std::exception&) {
    }
    rd.error(path + key, "object keys must be node ids");
    return -1;
}

void read_topology(const json& t, ScenarioConfig& c, Reader& rd) {
    const std::string p = "topology.";
    rd.known_keys(t, {"grid", "nodes", "radio_range", "loss_prob", "link_loss", "hop_delay_ms", "jitter_ms", "mesh_groups"}, p);
    if (const auto* g = rd.object(t, "grid", p)) {
        rd.known_keys(*g, {"rows", "cols", "spacing"}, p + "grid.");
        int rows = 0, cols = 0;
        double spacing = 100.0;
        rd.number(*g, "rows", rows, p + "grid.");
        rd.number(*g, "cols", cols, p + "grid.");
        rd.number(*g, "spacing", spacing, p + "grid.");
        if (rows < 1 || cols < 1) rd.error(p + "grid", "rows and cols must be positive");
        else c.topology.nodes = engine::grid_placement(rows, cols, spacing);
        if (t.contains("nodes")) rd.error(p + "nodes", "give either grid or nodes, not both");
    } else if (t.contains("nodes")) {
        const auto& arr = t.at("nodes");
        if (!arr.is_array()) {
            rd.error(p + "nodes", "expected an array");
        } else {
            for (std::size_t i = 0; i < arr.size(); ++i) {
                const std::string np = p + "nodes[" + std::to_string(i) + "].";
                if (!arr[i].is_object()) {
                    rd.error(np, "expected an object");
                    continue;
                }
                rd.known_keys(arr[i], {"id", "x", "y", "group"}, np);
                engine::NodePlacement n;
                n.id = static_cast<int>(i);
                rd.number(arr[i], "id", n.id, np);
                rd.number(arr[i], "x", n.x, np);
                rd.number(arr[i], "y", n.y, np);
                rd.number(arr[i], "group", n.mesh_group, np);
                c.topology.nodes.push_back(n);
            }
        }
    } else {
        rd.error("topology", "needs grid or nodes");
    }
    rd.number(t, "radio_range", c.topology.radio_range, p);
    rd.number(t, "loss_prob", c.topology.loss_prob, p);
    rd.millis(t, "hop_delay_ms", c.topology.hop_delay, p);
    if (t.contains("jitter_ms")) {
        const auto& j = t.at("jitter_ms");
        if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
            rd.error(p + "jitter_ms", "expected [lo, hi]");
        } else {
            c.routing.jitter_lo = c.qos.jitter_lo = SimTime::millis(j[0].get<double>());
            c.routing.jitter_hi = c.qos.jitter_hi = SimTime::millis(j[1].get<double>());
        }
    }
    if (t.contains("link_loss")) {
        const auto& arr = t.at("link_loss");
        if (!arr.is_array()) {
            rd.error(p + "link_loss", "expected an array");
        } else {
            for (std::size_t i = 0; i < arr.size(); ++i) {
                const std::string lp = p + "link_loss[" + std::to_string(i) + "].";
                if (!arr[i].is_object()) {
                    rd.error(lp, "expected an object");
                    continue;
                }
                engine::LinkLoss l;
                rd.number(arr[i], "a", l.a, lp);
                rd.number(arr[i], "b", l.b, lp);
                rd.number(arr[i], "loss", l.loss, lp);
                c.topology.link_loss.push_back(l);
            }
        }
    }
    if (const auto* g = rd.object(t, "mesh_groups", p)) {
        for (const auto& [k, v] : g->items()) {
            const int id = node_from_key(k, rd, p + "mesh_groups.");
            if (id < 0) continue;
            if (!v.is_number_integer()) {
                rd.error(p + "mesh_groups." + k, "expected an integer group");
                continue;
            }
            bool found = false;
            for (auto& n : c.topology.nodes) {
                if (n.id == id) {
                    n.mesh_group = v.get<int>();
                    found = true;
                }
            }
            if (!found) rd.error(p + "mesh_groups." + k, "unknown node");
        }
    }
}

void read_flow(const json& f, std::size_t i, ScenarioConfig& c, Reader& rd) {
    const std::string p = "flows[" + std::to_string(i) + "].";
    if (!f.is_object()) {
        rd.error(p, "expected an object");
        return;
    }
    rd.known_keys(f, {"id", "src", "dest", "rate", "size", "start", "stop", "t_max_ms", "b_min"}, p);
    aodv::FlowSpec fs;
    fs.id = static_cast<std::int32_t>(i + 1);
    rd.number(f, "id", fs.id, p);
    if (f.contains("src")) fs.src = rd.node(f.at("src"), p + "src");
    else rd.error(p + "src", "missing");
    if (f.contains("dest")) fs.dest = rd.node(f.at("dest"), p + "dest");
    else rd.error(p + "dest", "missing");
    rd.number(f, "rate", fs.rate, p);
    rd.number(f, "size", fs.packet_size, p);
    rd.seconds(f, "start", fs.start, p);
    rd.seconds(f, "stop", fs.stop, p);
    rd.millis(f, "t_max_ms", fs.t_max, p);
    rd.number(f, "b_min", fs.b_min, p);
    c.flows.push_back(fs);
}

void read_adversary(const std::string& key, const json& a, ScenarioConfig& c, Reader& rd) {
    const std::string p = "adversaries." + key + ".";
    const int id = node_from_key(key, rd, "adversaries.");
    if (id < 0) return;
    if (!a.is_object()) {
        rd.error(p, "expected an object");
        return;
    }
    rd.known_keys(a, {"kind", "inflation", "drop_prob", "policy", "peer", "tunnel_delay_ms", "tunnel_data", "rate", "delta",
                      "target", "dsn", "spoof", "start", "stop", "period"},
                  p);
    adversary::AttackProfile prof;
    std::string kind;
    rd.string(a, "kind", kind, p);
    if (auto k = adversary::kind_from_string(kind)) prof.kind = *k;
    else rd.error(p + "kind", "unknown attack kind '" + kind + "'");
    rd.number(a, "inflation", prof.inflation, p);
    rd.number(a, "drop_prob", prof.drop_prob, p);
    if (a.contains("policy")) {
        std::string pol;
        rd.string(a, "policy", pol, p);
        if (auto sp = adversary::policy_from_string(pol)) prof.policy = *sp;
        else rd.error(p + "policy", "unknown selfish policy '" + pol + "'");
    }
    if (a.contains("peer")) prof.peer = rd.node(a.at("peer"), p + "peer");
    rd.millis(a, "tunnel_delay_ms", prof.tunnel_delay, p);
    rd.boolean(a, "tunnel_data", prof.tunnel_data, p);
    rd.number(a, "rate", prof.rate, p);
    rd.number(a, "delta", prof.delta, p);
    if (a.contains("target")) prof.target = rd.node(a.at("target"), p + "target");
    rd.number(a, "dsn", prof.dsn, p);
    if (a.contains("spoof")) prof.spoof = rd.node(a.at("spoof"), p + "spoof");
    rd.seconds(a, "start", prof.start, p);
    rd.seconds(a, "stop", prof.stop, p);
    rd.seconds(a, "period", prof.period, p);
    c.adversaries[NodeId(id)] = prof;
}

void read_detection(const json& d, detection::DetectionParams& dp, DetectionConfig* cfg, Reader& rd) {
    const std::string p = "detection.";
    rd.known_keys(d, {"enabled", "feed_routing", "W", "d", "alpha", "beta", "k_max", "resamples", "anova_seed", "anova",
                      "rreq_timeout_ms", "rrep_timeout_ms", "header_extensions"},
                  p);
    if (cfg) {
        rd.boolean(d, "enabled", cfg->enabled, p);
        rd.boolean(d, "feed_routing", cfg->feed_routing, p);
        cfg->timeouts_given = d.contains("rreq_timeout_ms") || d.contains("rrep_timeout_ms");
    }
    rd.seconds(d, "W", dp.window_period, p);
    rd.number(d, "d", dp.window_multiple, p);
    rd.number(d, "alpha", dp.alpha, p);
    rd.number(d, "beta", dp.beta, p);
    rd.number(d, "k_max", dp.k_max, p);
    rd.number(d, "resamples", dp.resamples, p);
    rd.number(d, "anova_seed", dp.anova_seed, p);
    if (d.contains("anova")) {
        std::string method;
        rd.string(d, "anova", method, p);
        if (auto m = stats::anova_method_from_string(method)) dp.anova = *m;
        else rd.error(p + "anova", "unknown ANOVA method '" + method + "' (permutation or f_test)");
    }
    rd.millis(d, "rreq_timeout_ms", dp.rreq_timeout, p);
    rd.millis(d, "rrep_timeout_ms", dp.rrep_timeout, p);
    rd.boolean(d, "header_extensions", dp.header_extensions, p);
}

}  // namespace

SimTime ScenarioConfig::effective_warmup() const {
    if (warmup) return *warmup;
    return detection.enabled ? detection.params.window() : SimTime(0);
}

std::vector<std::string> validate_scenario(const ScenarioConfig& c) {
    std::vector<std::string> errors;
    const int n = c.node_count();
    if (n < 1) errors.push_back("topology: no nodes");
    std::set<int> ids;
    for (const auto& node : c.topology.nodes) {
        if (node.id < 0 || node.id >= n) errors.push_back("topology: node id " + std::to_string(node.id) + " outside 0.." + std::to_string(n - 1));
        if (!ids.insert(node.id).second) errors.push_back("topology: duplicate node id " + std::to_string(node.id));
    }
    if (!(c.topology.radio_range > 0.0)) errors.push_back("topology.radio_range: must be positive");
    if (!(c.topology.loss_prob >= 0.0 && c.topology.loss_prob <= 1.0)) errors.push_back("topology.loss_prob: must lie in [0, 1]");
    for (const auto& l : c.topology.link_loss) {
        if (l.a < 0 || l.a >= n || l.b < 0 || l.b >= n) errors.push_back("topology.link_loss: unknown node in link " + std::to_string(l.a) + "-" + std::to_string(l.b));
        if (!(l.loss >= 0.0 && l.loss <= 1.0)) errors.push_back("topology.link_loss: loss must lie in [0, 1]");
    }
    if (c.routing.jitter_lo > c.routing.jitter_hi || c.routing.jitter_lo < SimTime(0)) errors.push_back("topology.jitter_ms: need 0 <= lo <= hi");
    if (c.duration <= SimTime(0)) errors.push_back("duration: must be positive");
    if (c.routing.ttl < 1 || c.routing.ttl > 255) errors.push_back("routing.ttl: must lie in 1..255");

    for (const auto& f : c.flows) {
        const std::string where = "flow " + std::to_string(f.id);
        if (!f.src.valid() || f.src.value() >= n) errors.push_back(where + ": unknown source node " + std::to_string(f.src.value()));
        if (!f.dest.valid() || f.dest.value() >= n) errors.push_back(where + ": unknown destination node " + std::to_string(f.dest.value()));
        if (f.src == f.dest) errors.push_back(where + ": source equals destination");
        if (!(f.rate > 0.0)) errors.push_back(where + ": rate must be positive");
    }
    std::set<std::int32_t> flow_ids;
    for (const auto& f : c.flows) {
        if (!flow_ids.insert(f.id).second) errors.push_back("flow " + std::to_string(f.id) + ": duplicate id");
    }
    for (const auto& [s, d] : c.discoveries.pairs) {
        if (!s.valid() || s.value() >= n || !d.valid() || d.value() >= n || s == d) {
            errors.push_back("discoveries.pairs: invalid pair " + std::to_string(s.value()) + "->" + std::to_string(d.value()));
        }
    }
    if (c.discoveries.count < 0) errors.push_back("discoveries.count: must be non-negative");
    if (c.discoveries.count > 0 && c.discoveries.pairs.empty() && n < 2) errors.push_back("discoveries: need at least two nodes");

    for (auto& e : adversary::validate_profiles(c.adversaries, n)) errors.push_back(std::move(e));

    if (c.protocol == secure::Protocol::Saodv || c.protocol == secure::Protocol::Seaodv) {
        if (!crypto::is_prime(c.crypto.q)) errors.push_back("crypto.q: non-prime modulus " + std::to_string(c.crypto.q));
        else if (c.crypto.q <= static_cast<std::uint64_t>(n)) errors.push_back("crypto.q: modulus must exceed the node count");
        if (c.crypto.t >= n) errors.push_back("crypto.t: must be below the node count");
        if (c.crypto.hash_bytes < 1 || c.crypto.hash_bytes > 32) errors.push_back("crypto.hash_bytes: must lie in 1..32");
        if (c.crypto.tag_bytes < 1 || c.crypto.tag_bytes > 32) errors.push_back("crypto.tag_bytes: must lie in 1..32");
    } else if (c.crypto.q != 0 && !crypto::is_prime(c.crypto.q)) {
        errors.push_back("crypto.q: non-prime modulus " + std::to_string(c.crypto.q));
    }
    if (c.detection.enabled) {
        for (auto& e : c.detection.params.validate()) errors.push_back("detection: " + e);
    }
    return errors;
}

LoadResult parse_scenario(const std::string& text) {
    LoadResult result;
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        result.errors.push_back(std::string("scenario is not valid JSON: ") + e.what());
        return result;
    }
    if (!doc.is_object()) {
        result.errors.push_back("scenario: expected a JSON object");
        return result;
    }
    Reader rd(result.errors);
    ScenarioConfig c;
    rd.known_keys(doc, {"name", "seed", "duration", "warmup", "protocol", "topology", "routing", "qos", "crypto", "flows",
                        "discoveries", "adversaries", "detection", "engine"},
                  "");
    rd.string(doc, "name", c.name, "");
    rd.number(doc, "seed", c.seed, "");
    rd.seconds(doc, "duration", c.duration, "");
    if (doc.contains("warmup")) {
        SimTime w;
        rd.seconds(doc, "warmup", w, "");
        c.warmup = w;
    }
    if (doc.contains("protocol")) {
        std::string proto;
        rd.string(doc, "protocol", proto, "");
        if (auto pr = secure::protocol_from_string(proto)) c.protocol = *pr;
        else rd.error("protocol", "unknown protocol '" + proto + "'");
    }
    if (const auto* t = rd.object(doc, "topology", "")) read_topology(*t, c, rd);
    else rd.error("topology", "missing");

    if (const auto* r = rd.object(doc, "routing", "")) {
        const std::string p = "routing.";
        rd.known_keys(*r, {"ttl", "intermediate_replies", "header_extensions", "randomized_forwarding", "rreq_rate_limit",
                           "active_route_timeout", "discovery_retries", "collect_window_ms"},
                      p);
        rd.number(*r, "ttl", c.routing.ttl, p);
        rd.boolean(*r, "intermediate_replies", c.routing.intermediate_replies, p);
        rd.boolean(*r, "header_extensions", c.routing.header_extensions, p);
        rd.boolean(*r, "randomized_forwarding", c.routing.randomized_forwarding, p);
        rd.number(*r, "rreq_rate_limit", c.routing.rreq_rate_limit, p);
        rd.seconds(*r, "active_route_timeout", c.routing.active_route_timeout, p);
        rd.number(*r, "discovery_retries", c.routing.discovery_retries, p);
        rd.millis(*r, "collect_window_ms", c.routing.collect_window, p);
    }
    c.qos.ttl = c.routing.ttl;
    if (const auto* q = rd.object(doc, "qos", "")) {
        const std::string p = "qos.";
        rd.known_keys(*q, {"alpha", "gate", "interval", "selective_flooding", "candidate_cap", "capacity_Bps",
                           "reservation_timeout", "discovery_wait_ms"},
                      p);
        rd.number(*q, "alpha", c.qos.alpha, p);
        rd.number(*q, "gate", c.qos.gate, p);
        rd.seconds(*q, "interval", c.qos.interval, p);
        rd.boolean(*q, "selective_flooding", c.qos.selective_flooding, p);
        rd.number(*q, "candidate_cap", c.qos.candidate_cap, p);
        rd.number(*q, "capacity_Bps", c.qos.capacity_Bps, p);
        rd.seconds(*q, "reservation_timeout", c.qos.reservation_timeout, p);
        rd.millis(*q, "discovery_wait_ms", c.qos.discovery_wait, p);
    }
    if (const auto* cr = rd.object(doc, "crypto", "")) {
        const std::string p = "crypto.";
        rd.known_keys(*cr, {"q", "t", "g", "hash_bytes", "tag_bytes", "chain_length"}, p);
        rd.number(*cr, "q", c.crypto.q, p);
        rd.number(*cr, "t", c.crypto.t, p);
        if (cr->contains("g")) {
            std::uint64_t g = 0;
            rd.number(*cr, "g", g, p);
            c.crypto.g = g;
        }
        rd.number(*cr, "hash_bytes", c.crypto.hash_bytes, p);
        rd.number(*cr, "tag_bytes", c.crypto.tag_bytes, p);
        rd.number(*cr, "chain_length", c.crypto.chain_length, p);
    }
    if (doc.contains("flows")) {
        const auto& arr = doc.at("flows");
        if (!arr.is_array()) rd.error("flows", "expected an array");
        else
            for (std::size_t i = 0; i < arr.size(); ++i) read_flow(arr[i], i, c, rd);
    }
    if (const auto* d = rd.object(doc, "discoveries", "")) {
        const std::string p = "discoveries.";
        rd.known_keys(*d, {"count", "start", "interval", "pairs"}, p);
        rd.number(*d, "count", c.discoveries.count, p);
        rd.seconds(*d, "start", c.discoveries.start, p);
        rd.seconds(*d, "interval", c.discoveries.interval, p);
        if (d->contains("pairs")) {
            const auto& arr = d->at("pairs");
            if (!arr.is_array()) {
                rd.error(p + "pairs", "expected an array");
            } else {
                for (const auto& pr : arr) {
                    if (!pr.is_array() || pr.size() != 2) {
                        rd.error(p + "pairs", "each pair must be [src, dest]");
                        continue;
                    }
                    c.discoveries.pairs.emplace_back(rd.node(pr[0], p + "pairs"), rd.node(pr[1], p + "pairs"));
                }
            }
        }
    }
    if (const auto* a = rd.object(doc, "adversaries", "")) {
        for (const auto& [k, v] : a->items()) read_adversary(k, v, c, rd);
    }
    if (const auto* d = rd.object(doc, "detection", "")) {
        read_detection(*d, c.detection.params, &c.detection, rd);
        if (!d->contains("header_extensions")) c.detection.params.header_extensions = c.routing.header_extensions;
    } else {
        c.detection.params.header_extensions = c.routing.header_extensions;
    }
    if (const auto* e = rd.object(doc, "engine", "")) {
        const std::string p = "engine.";
        rd.known_keys(*e, {"event_cap", "link_rate_Bps", "queue_limit"}, p);
        rd.number(*e, "event_cap", c.engine.event_cap, p);
        rd.number(*e, "link_rate_Bps", c.engine.link_rate_Bps, p);
        rd.number(*e, "queue_limit", c.engine.queue_limit, p);
    }

    for (auto& e : validate_scenario(c)) result.errors.push_back(std::move(e));
    if (result.errors.empty()) result.config = std::move(c);
    return result;
}

LoadResult load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        LoadResult r;
        r.errors.push_back("cannot open scenario file " + path.string());
        return r;
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str());
}

std::vector<std::string> parse_detection_params(const std::string& text, detection::DetectionParams& out) {
    std::vector<std::string> errors;
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        errors.push_back(std::string("detection parameters are not valid JSON: ") + e.what());
        return errors;
    }
    if (doc.is_object() && doc.contains("detection") && doc.at("detection").is_object()) doc = doc.at("detection");
    if (!doc.is_object()) {
        errors.push_back("detection parameters: expected a JSON object");
        return errors;
    }
    Reader rd(errors);
    detection::DetectionParams p = out;
    read_detection(doc, p, nullptr, rd);
    for (auto& e : p.validate()) errors.push_back("detection: " + e);
    if (errors.empty()) out = p;
    return errors;
}

}  // namespace meshsim::harness
