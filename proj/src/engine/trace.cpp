#include "meshsim/engine/trace.hpp"

#include <array>
#include <charconv>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace meshsim::engine {

namespace {

constexpr std::array<std::pair<TraceKind, std::string_view>, 17> kKinds{{
    {TraceKind::Tx, "tx"},
    {TraceKind::Rx, "rx"},
    {TraceKind::Overhear, "overhear"},
    {TraceKind::Tunnel, "tunnel"},
    {TraceKind::Drop, "drop"},
    {TraceKind::Deliver, "deliver"},
    {TraceKind::DropTtl, "drop-ttl"},
    {TraceKind::DropDuplicate, "drop-duplicate"},
    {TraceKind::DropNoRoute, "drop-no-route"},
    {TraceKind::DropScope, "drop-scope"},
    {TraceKind::DropGate, "drop-gate"},
    {TraceKind::DropNoKey, "drop-no-key"},
    {TraceKind::DiscoveryDeferred, "discovery-deferred"},
    {TraceKind::RejectBadSignature, "reject-bad-signature"},
    {TraceKind::RejectBadHca, "reject-bad-hca"},
    {TraceKind::RejectUnknownKey, "reject-unknown-key"},
    {TraceKind::RejectTagMismatch, "reject-tag-mismatch"},
}};

constexpr std::array<std::pair<DropCause, std::string_view>, 4> kCauses{{
    {DropCause::None, "none"},
    {DropCause::LinkLoss, "link-loss"},
    {DropCause::Adversary, "adversary"},
    {DropCause::Queue, "queue"},
}};

template <class T>
T parse_int(std::string_view field, std::size_t line) {
    T v{};
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
        throw std::invalid_argument("trace line " + std::to_string(line) + ": bad integer '" + std::string(field) + "'");
    }
    return v;
}

}  // namespace

std::string_view to_string(TraceKind kind) {
    for (const auto& [k, s] : kKinds) {
        if (k == kind) return s;
    }
    return "?";
}

std::string_view to_string(DropCause cause) {
    for (const auto& [c, s] : kCauses) {
        if (c == cause) return s;
    }
    return "?";
}

std::optional<TraceKind> trace_kind_from_string(std::string_view s) {
    for (const auto& [k, name] : kKinds) {
        if (name == s) return k;
    }
    return std::nullopt;
}

std::optional<DropCause> drop_cause_from_string(std::string_view s) {
    for (const auto& [c, name] : kCauses) {
        if (name == s) return c;
    }
    return std::nullopt;
}

void TraceLog::write_csv(std::ostream& out) const {
    out << "time_us,kind,src,dst,pkt_type,flow_id,drop_cause\n";
    for (const auto& r : records_) {
        out << r.time.ticks() << ',' << to_string(r.kind) << ',' << r.src.value() << ',' << r.dst.value() << ','
            << (r.type ? aodv::to_string(*r.type) : std::string_view("-")) << ',' << r.flow_id << ',' << to_string(r.cause) << '\n';
    }
}

TraceLog TraceLog::read_csv(std::istream& in) {
    TraceLog log;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line_no == 1 && line.rfind("time_us", 0) == 0) continue;
        std::array<std::string_view, 7> f;
        std::size_t start = 0;
        std::size_t count = 0;
        const std::string_view view(line);
        while (count < f.size()) {
            const auto comma = view.find(',', start);
            f[count++] = view.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (count != f.size()) throw std::invalid_argument("trace line " + std::to_string(line_no) + ": expected 7 columns");
        TraceRecord r;
        r.time = SimTime(parse_int<std::int64_t>(f[0], line_no));
        const auto kind = trace_kind_from_string(f[1]);
        if (!kind) throw std::invalid_argument("trace line " + std::to_string(line_no) + ": unknown kind '" + std::string(f[1]) + "'");
        r.kind = *kind;
        r.src = NodeId(parse_int<std::int32_t>(f[2], line_no));
        r.dst = NodeId(parse_int<std::int32_t>(f[3], line_no));
        if (f[4] != "-") {
            r.type = aodv::packet_type_from_string(f[4]);
            if (!r.type) throw std::invalid_argument("trace line " + std::to_string(line_no) + ": unknown packet type");
        }
        r.flow_id = parse_int<std::int64_t>(f[5], line_no);
        const auto cause = drop_cause_from_string(f[6]);
        if (!cause) throw std::invalid_argument("trace line " + std::to_string(line_no) + ": unknown drop cause");
        r.cause = *cause;
        log.append(r);
    }
    return log;
}

}  // namespace meshsim::engine
