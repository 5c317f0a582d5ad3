#include "meshsim/secure/secure.hpp"

#include <algorithm>
#include <stdexcept>

#include "meshsim/crypto/hash_chain.hpp"

namespace meshsim::secure {

namespace {

crypto::Bytes random_bytes(Rng& rng, std::size_t n) {
    crypto::Bytes out(n);
    for (std::size_t i = 0; i < n; i += 8) {
        const std::uint64_t v = rng.next_u64();
        for (std::size_t j = 0; j < 8 && i + j < n; ++j) out[i + j] = static_cast<std::uint8_t>(v >> (8 * j));
    }
    return out;
}

constexpr std::size_t kGtkBytes = 16;

}  // namespace

std::string_view to_string(Protocol p) {
    switch (p) {
        case Protocol::Aodv: return "aodv";
        case Protocol::Saodv: return "saodv";
        case Protocol::Seaodv: return "seaodv";
        case Protocol::Qos: return "qos";
    }
    return "?";
}

std::optional<Protocol> protocol_from_string(std::string_view s) {
    for (auto p : {Protocol::Aodv, Protocol::Saodv, Protocol::Seaodv, Protocol::Qos}) {
        if (to_string(p) == s) return p;
    }
    return std::nullopt;
}

std::string_view to_string(Verdict v) {
    switch (v) {
        case Verdict::Accept: return "accept";
        case Verdict::BadSignature: return "bad-signature";
        case Verdict::BadHca: return "bad-hca";
        case Verdict::UnknownKey: return "unknown-key";
        case Verdict::TagMismatch: return "tag-mismatch";
    }
    return "?";
}

KeyAuthority::KeyAuthority(int node_count, const CryptoParams& params, std::uint64_t seed)
    : params_(params), hasher_(params.hash_bytes) {
    if (node_count < 1) throw std::invalid_argument("key authority needs at least one node");
    for (int i = 0; i < node_count; ++i) {
        Rng rng = Rng::derive(seed, i, StreamPurpose::Crypto);
        signing_keys_.push_back(random_bytes(rng, 16));
    }
    const int t = params.t >= 0 ? params.t : std::max(0, std::min(4, node_count - 2));
    Rng setup_rng = Rng::derive(seed, -2, StreamPurpose::Setup);
    blom_ = crypto::blom_setup(setup_rng, node_count, t, params.q, params.g);
}

const crypto::Bytes& KeyAuthority::signing_key(NodeId n) const {
    if (!has_signing_key(n)) throw std::out_of_range("no signing key for node " + std::to_string(n.value()));
    return signing_keys_[n.index()];
}

// ---- SAODV -----------------------------------------------------------------

NodeId saodv_signer(const aodv::Packet& p) {
    if (const auto* q = std::get_if<aodv::Rreq>(&p.body)) return q->src;
    if (const auto* r = std::get_if<aodv::Rrep>(&p.body)) return r->target;
    return p.sender;
}

void saodv_extend(aodv::Packet& p, const crypto::Bytes& signing_key, const crypto::Hasher& hasher, Rng& rng, int max_hops,
                  std::size_t tag_bytes) {
    const auto chain = crypto::saodv_chain_generate(hasher, rng, max_hops);
    aodv::SaodvExtension ext;
    ext.max_hops = static_cast<std::uint8_t>(max_hops);
    ext.anchor = chain.anchor();
    ext.hca = crypto::hca_for_hopcount(chain, 0);
    p.saodv = ext;
    p.saodv->signature = crypto::mac_compute(signing_key, aodv::encode_signed_part(p), tag_bytes);
}

void saodv_sign_rerr(aodv::Packet& p, const crypto::Bytes& signing_key, std::size_t tag_bytes) {
    p.saodv = aodv::SaodvExtension{};
    p.saodv->signature = crypto::mac_compute(signing_key, aodv::encode_signed_part(p), tag_bytes);
}

Verdict saodv_verify(const aodv::Packet& p, const crypto::Bytes& signer_key, const crypto::Hasher& hasher) {
    if (!p.saodv) return Verdict::BadSignature;
    if (!crypto::mac_verify(signer_key, aodv::encode_signed_part(p), p.saodv->signature)) return Verdict::BadSignature;
    int hop_count = -1;
    if (const auto* q = std::get_if<aodv::Rreq>(&p.body)) hop_count = q->hop_count;
    if (const auto* r = std::get_if<aodv::Rrep>(&p.body)) hop_count = r->hop_count;
    if (hop_count < 0) return Verdict::Accept;
    if (!crypto::hca_verify(hasher, p.saodv->anchor, p.saodv->max_hops, hop_count, p.saodv->hca)) return Verdict::BadHca;
    return Verdict::Accept;
}

void saodv_advance(aodv::Packet& p, const crypto::Hasher& hasher) {
    if (p.saodv) p.saodv->hca = crypto::hca_advance(hasher, p.saodv->hca);
}

// ---- SEAODV ----------------------------------------------------------------

bool seaodv_uses_group_key(aodv::PacketType type) {
    return type == aodv::PacketType::Rreq || type == aodv::PacketType::Rerr;
}

SeaodvKeys::SeaodvKeys(NodeId self, const KeyAuthority& authority, Rng& rng)
    : self_(self), authority_(&authority), gtk_(random_bytes(rng, kGtkBytes)) {}

std::optional<crypto::Bytes> SeaodvKeys::ptk(NodeId peer) const {
    auto it = ptk_.find(peer);
    if (it == ptk_.end()) return std::nullopt;
    return it->second;
}

std::optional<crypto::Bytes> SeaodvKeys::gtk(NodeId peer) const {
    if (peer == self_) return gtk_;
    auto it = gtk_of_.find(peer);
    if (it == gtk_of_.end()) return std::nullopt;
    return it->second;
}

crypto::Bytes SeaodvKeys::derive_ptk(NodeId peer) const {
    const auto& pub = authority_->blom_public();
    const auto column = pub.column(blom_index(peer));
    const auto k = crypto::blom_pairwise_key(authority_->blom_row(self_).row, column, pub.q);
    return crypto::key_from_field_element(k);
}

aodv::Packet SeaodvKeys::hello_request(NodeId to) const {
    aodv::Packet p;
    p.sender = self_;
    aodv::Hello h;
    h.id = self_;
    h.g = authority_->blom_public().g;
    h.blom_index = static_cast<std::uint32_t>(blom_index(self_));
    h.to = to;
    p.body = h;
    return p;
}

std::optional<aodv::Packet> SeaodvKeys::on_hello(const aodv::Packet& p, Rng& rng) {
    const auto& h = p.as<aodv::Hello>();
    const auto& pub = authority_->blom_public();
    if (!h.id.valid() || h.id == self_ || h.id.value() >= pub.n) return std::nullopt;
    if (static_cast<int>(h.blom_index) != blom_index(h.id) || h.g != pub.g) return std::nullopt;
    if (!h.reply) {
        if (h.to.valid() && h.to != self_) return std::nullopt;
        const auto key = derive_ptk(h.id);
        ptk_[h.id] = key;
        aodv::Packet reply;
        reply.sender = self_;
        aodv::Hello r;
        r.id = self_;
        r.g = pub.g;
        r.blom_index = static_cast<std::uint32_t>(blom_index(self_));
        r.reply = true;
        r.to = h.id;
        r.nonce = rng.next_u64();
        r.sealed_gtk = crypto::keystream_xor(key, r.nonce, gtk_);
        reply.body = r;
        reply.mac = crypto::mac_compute(key, aodv::encode(reply, false), authority_->tag_bytes());
        return reply;
    }
    if (h.to != self_ || !p.mac) return std::nullopt;
    const auto key = derive_ptk(h.id);
    if (!crypto::mac_verify(key, aodv::encode(p, false), *p.mac)) return std::nullopt;
    ptk_[h.id] = key;
    gtk_of_[h.id] = crypto::keystream_xor(key, h.nonce, h.sealed_gtk);
    return std::nullopt;
}

bool SeaodvKeys::protect(aodv::Packet& p, NodeId next_hop) const {
    p.mac.reset();
    if (seaodv_uses_group_key(p.type())) {
        p.mac = crypto::mac_compute(gtk_, aodv::encode(p, false), authority_->tag_bytes());
        return true;
    }
    auto key = ptk(next_hop);
    if (!key) return false;
    p.mac = crypto::mac_compute(*key, aodv::encode(p, false), authority_->tag_bytes());
    return true;
}

Verdict SeaodvKeys::verify(const aodv::Packet& p) const {
    const auto key = seaodv_uses_group_key(p.type()) ? gtk(p.sender) : ptk(p.sender);
    if (!key) return Verdict::UnknownKey;
    if (!p.mac || !crypto::mac_verify(*key, aodv::encode(p, false), *p.mac)) return Verdict::TagMismatch;
    return Verdict::Accept;
}

void SeaodvKeys::install_pair(NodeId peer, const SeaodvKeys& other) {
    ptk_[peer] = derive_ptk(peer);
    gtk_of_[peer] = other.gtk_;
}

}  // namespace meshsim::secure
