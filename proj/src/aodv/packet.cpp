#include "meshsim/aodv/packet.hpp"

#include <stdexcept>

namespace meshsim::aodv {

namespace {

class Writer {
public:
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint16_t v) { be(v, 2); }
    void u32(std::uint32_t v) { be(v, 4); }
    void u64(std::uint64_t v) { be(v, 8); }
    void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
    void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
    void node(NodeId n) { i32(n.value()); }
    void time(SimTime t) { i64(t.ticks()); }
    void nodes(const std::vector<NodeId>& v) {
        u8(static_cast<std::uint8_t>(v.size()));
        for (NodeId n : v) node(n);
    }
    void blob(std::span<const std::uint8_t> b) {
        u8(static_cast<std::uint8_t>(b.size()));
        out_.insert(out_.end(), b.begin(), b.end());
    }
    crypto::Bytes take() { return std::move(out_); }

private:
    void be(std::uint64_t v, int width) {
        for (int i = width - 1; i >= 0; --i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    crypto::Bytes out_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

    std::uint8_t u8() { return static_cast<std::uint8_t>(be(1)); }
    std::uint16_t u16() { return static_cast<std::uint16_t>(be(2)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(be(4)); }
    std::uint64_t u64() { return be(8); }
    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
    std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
    NodeId node() { return NodeId(i32()); }
    SimTime time() { return SimTime(i64()); }
    std::vector<NodeId> nodes() {
        std::vector<NodeId> v(u8());
        for (auto& n : v) n = node();
        return v;
    }
    crypto::Bytes blob() {
        const std::size_t n = u8();
        need(n);
        crypto::Bytes b(in_.begin() + static_cast<std::ptrdiff_t>(pos_), in_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
        pos_ += n;
        return b;
    }
    bool done() const { return pos_ == in_.size(); }

private:
    void need(std::size_t n) const {
        if (pos_ + n > in_.size()) throw std::invalid_argument("truncated packet");
    }
    std::uint64_t be(std::size_t width) {
        need(width);
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < width; ++i) v = (v << 8) | in_[pos_ + i];
        pos_ += width;
        return v;
    }
    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

void write_body(Writer& w, const Rreq& r) {
    w.node(r.src);
    w.u32(r.src_seq);
    w.u32(r.bcast_id);
    w.node(r.dest);
    w.u32(r.dest_seq_known);
    w.u8(r.hop_count);
    w.u8(r.ttl);
    w.node(r.next_to_source);
    w.u8(r.duplicate_flag ? 1 : 0);
    w.nodes(r.route);
}

void write_body(Writer& w, const Rrep& r) {
    w.node(r.target);
    w.node(r.origin);
    w.u32(r.dest_seq);
    w.u8(r.hop_count);
    w.time(r.lifetime);
    w.node(r.next_to_destination);
    w.u8(r.flags);
    w.i32(r.flow_id);
    w.u32(r.attempt);
    w.i64(r.probe_delay_us);
    w.u32(r.reliability_milli);
    w.nodes(r.route);
}

void write_body(Writer& w, const Rerr& r) {
    w.u8(static_cast<std::uint8_t>(r.unreachable.size()));
    for (const auto& u : r.unreachable) {
        w.node(u.dest);
        w.u32(u.dest_seq);
    }
    w.node(r.notify);
    w.i32(r.flow_id);
    w.u8(static_cast<std::uint8_t>(r.reason));
    w.nodes(r.route);
}

void write_body(Writer& w, const Data& d) {
    w.i32(d.flow_id);
    w.node(d.src);
    w.node(d.dest);
    w.u32(d.seq);
    w.time(d.created);
    w.u32(d.size);
    w.u32(d.link_seq);
    w.time(d.hop_sent_at);
    w.nodes(d.route);
}

void write_body(Writer& w, const Hello& h) {
    w.node(h.id);
    w.u64(h.g);
    w.u32(h.blom_index);
    w.u8(h.reply ? 1 : 0);
    w.node(h.to);
    w.u64(h.nonce);
    w.blob(h.sealed_gtk);
}

void write_body(Writer& w, const Probe& p) {
    w.i32(p.flow_id);
    w.node(p.src);
    w.node(p.dest);
    w.u16(p.index);
    w.u16(p.total);
    w.u32(p.attempt);
    w.time(p.sent_at);
    w.u32(p.size);
    w.u8(p.hop_index);
    w.nodes(p.route);
}

Body read_body(Reader& r, PacketType type) {
    switch (type) {
        case PacketType::Rreq: {
            Rreq q;
            q.src = r.node();
            q.src_seq = r.u32();
            q.bcast_id = r.u32();
            q.dest = r.node();
            q.dest_seq_known = r.u32();
            q.hop_count = r.u8();
            q.ttl = r.u8();
            q.next_to_source = r.node();
            q.duplicate_flag = r.u8() != 0;
            q.route = r.nodes();
            return q;
        }
        case PacketType::Rrep: {
            Rrep p;
            p.target = r.node();
            p.origin = r.node();
            p.dest_seq = r.u32();
            p.hop_count = r.u8();
            p.lifetime = r.time();
            p.next_to_destination = r.node();
            p.flags = r.u8();
            p.flow_id = r.i32();
            p.attempt = r.u32();
            p.probe_delay_us = r.i64();
            p.reliability_milli = r.u32();
            p.route = r.nodes();
            return p;
        }
        case PacketType::Rerr: {
            Rerr e;
            e.unreachable.resize(r.u8());
            for (auto& u : e.unreachable) {
                u.dest = r.node();
                u.dest_seq = r.u32();
            }
            e.notify = r.node();
            e.flow_id = r.i32();
            e.reason = static_cast<RerrReason>(r.u8());
            e.route = r.nodes();
            return e;
        }
        case PacketType::Data: {
            Data d;
            d.flow_id = r.i32();
            d.src = r.node();
            d.dest = r.node();
            d.seq = r.u32();
            d.created = r.time();
            d.size = r.u32();
            d.link_seq = r.u32();
            d.hop_sent_at = r.time();
            d.route = r.nodes();
            return d;
        }
        case PacketType::Hello: {
            Hello h;
            h.id = r.node();
            h.g = r.u64();
            h.blom_index = r.u32();
            h.reply = r.u8() != 0;
            h.to = r.node();
            h.nonce = r.u64();
            h.sealed_gtk = r.blob();
            return h;
        }
        case PacketType::Probe: {
            Probe p;
            p.flow_id = r.i32();
            p.src = r.node();
            p.dest = r.node();
            p.index = r.u16();
            p.total = r.u16();
            p.attempt = r.u32();
            p.sent_at = r.time();
            p.size = r.u32();
            p.hop_index = r.u8();
            p.route = r.nodes();
            return p;
        }
    }
    throw std::invalid_argument("unknown packet type");
}

void write_tag(Writer& w, const crypto::MacTag& tag) { w.blob(tag.view()); }

crypto::MacTag read_tag(Reader& r) {
    const auto b = r.blob();
    if (b.size() > 32) throw std::invalid_argument("oversized tag");
    crypto::MacTag tag;
    std::copy(b.begin(), b.end(), tag.bytes.begin());
    tag.size = b.size();
    return tag;
}

}  // namespace

std::string_view to_string(PacketType type) {
    switch (type) {
        case PacketType::Rreq: return "RREQ";
        case PacketType::Rrep: return "RREP";
        case PacketType::Rerr: return "RERR";
        case PacketType::Data: return "DATA";
        case PacketType::Hello: return "HELLO";
        case PacketType::Probe: return "PROBE";
    }
    return "?";
}

std::optional<PacketType> packet_type_from_string(std::string_view s) {
    for (auto t : {PacketType::Rreq, PacketType::Rrep, PacketType::Rerr, PacketType::Data, PacketType::Hello, PacketType::Probe}) {
        if (to_string(t) == s) return t;
    }
    return std::nullopt;
}

std::int64_t Packet::trace_flow() const {
    if (auto key = lmu()) return key->code();
    if (const auto* d = std::get_if<Data>(&body)) return d->flow_id;
    if (const auto* p = std::get_if<Probe>(&body)) return p->flow_id;
    if (const auto* e = std::get_if<Rerr>(&body)) return e->flow_id;
    return -1;
}

std::optional<LmuKey> Packet::lmu() const {
    if (const auto* q = std::get_if<Rreq>(&body)) return LmuKey{q->src, q->dest};
    if (const auto* p = std::get_if<Rrep>(&body)) return LmuKey{p->origin, p->target};
    return std::nullopt;
}

std::size_t Packet::wire_size() const {
    std::size_t payload = 0;
    if (const auto* d = std::get_if<Data>(&body)) payload = d->size;
    if (const auto* p = std::get_if<Probe>(&body)) payload = p->size;
    return encode(*this).size() + payload;
}

crypto::Bytes encode(const Packet& p, bool with_mac) {
    Writer w;
    w.u8(static_cast<std::uint8_t>(p.type()));
    w.node(p.sender);
    std::visit([&](const auto& b) { write_body(w, b); }, p.body);
    w.u8(p.saodv ? 1 : 0);
    if (p.saodv) {
        write_tag(w, p.saodv->signature);
        w.u8(p.saodv->max_hops);
        w.blob(p.saodv->anchor.bytes());
        w.blob(p.saodv->hca.bytes());
    }
    if (with_mac) {
        w.u8(p.mac ? 1 : 0);
        if (p.mac) write_tag(w, *p.mac);
    }
    return w.take();
}

Packet decode(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    const auto raw = r.u8();
    if (raw < 1 || raw > 6) throw std::invalid_argument("unknown packet type");
    Packet p;
    p.sender = r.node();
    p.body = read_body(r, static_cast<PacketType>(raw));
    if (r.u8() != 0) {
        SaodvExtension ext;
        ext.signature = read_tag(r);
        ext.max_hops = r.u8();
        ext.anchor = crypto::Digest(r.blob());
        ext.hca = crypto::Digest(r.blob());
        p.saodv = ext;
    }
    if (r.u8() != 0) p.mac = read_tag(r);
    if (!r.done()) throw std::invalid_argument("trailing bytes after packet");
    return p;
}

crypto::Bytes encode_signed_part(const Packet& p) {
    Writer w;
    w.u8(static_cast<std::uint8_t>(p.type()));
    if (const auto* q = std::get_if<Rreq>(&p.body)) {
        w.node(q->src);
        w.u32(q->src_seq);
        w.u32(q->bcast_id);
        w.node(q->dest);
        w.u32(q->dest_seq_known);
    } else if (const auto* r = std::get_if<Rrep>(&p.body)) {
        w.node(r->target);
        w.node(r->origin);
        w.u32(r->dest_seq);
        w.time(r->lifetime);
    } else if (const auto* e = std::get_if<Rerr>(&p.body)) {
        w.node(p.sender);
        write_body(w, *e);
    } else {
        std::visit([&](const auto& b) { write_body(w, b); }, p.body);
    }
    if (p.saodv) {
        w.u8(p.saodv->max_hops);
        w.blob(p.saodv->anchor.bytes());
    }
    return w.take();
}

}  // namespace meshsim::aodv
