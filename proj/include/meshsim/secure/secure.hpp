#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "meshsim/aodv/packet.hpp"
#include "meshsim/core/rng.hpp"
#include "meshsim/crypto/blom.hpp"
#include "meshsim/crypto/hash.hpp"
#include "meshsim/crypto/mac.hpp"

namespace meshsim::secure {

enum class Protocol { Aodv, Saodv, Seaodv, Qos };

std::string_view to_string(Protocol p);
std::optional<Protocol> protocol_from_string(std::string_view s);

enum class Verdict { Accept, BadSignature, BadHca, UnknownKey, TagMismatch };

std::string_view to_string(Verdict v);

struct CryptoParams {
    std::uint64_t q = 1009;
    int t = -1;  // -1: min(4, n - 2)
    std::optional<std::uint64_t> g;  // smallest primitive element when empty
    std::size_t hash_bytes = 8;
    std::size_t tag_bytes = 8;
    int chain_length = 0;  // 0: use the scenario TTL
};

/// Scenario-wide key material: the signature verification table used by
/// SAODV and the Blom setup used by SEAODV. Built once per run by the
/// central authority.
class KeyAuthority {
public:
    KeyAuthority(int node_count, const CryptoParams& params, std::uint64_t seed);

    const crypto::Hasher& hasher() const { return hasher_; }
    std::size_t tag_bytes() const { return params_.tag_bytes; }
    int chain_length() const { return params_.chain_length; }
    const crypto::Bytes& signing_key(NodeId n) const;
    bool has_signing_key(NodeId n) const { return n.valid() && n.index() < signing_keys_.size(); }

    const crypto::BlomPublic& blom_public() const { return blom_.pub; }
    const crypto::BlomPrivateRow& blom_row(NodeId n) const { return blom_.rows.at(n.index()); }

private:
    CryptoParams params_;
    crypto::Hasher hasher_;
    std::vector<crypto::Bytes> signing_keys_;
    crypto::BlomSetup blom_;
};

// ---- SAODV -----------------------------------------------------------------

/// Identity whose key signs this packet: the RREQ originator, the RREP's
/// destination, or the RERR's claimed sender.
NodeId saodv_signer(const aodv::Packet& p);

/// Attaches a fresh hash chain and signature; hop count must be 0.
void saodv_extend(aodv::Packet& p, const crypto::Bytes& signing_key, const crypto::Hasher& hasher, Rng& rng, int max_hops,
                  std::size_t tag_bytes);

/// Signature over a RERR by its sender (no hash chain).
void saodv_sign_rerr(aodv::Packet& p, const crypto::Bytes& signing_key, std::size_t tag_bytes);

/// Checks the signature against the signer's key and the HCA against the
/// signed anchor for the carried hop count.
Verdict saodv_verify(const aodv::Packet& p, const crypto::Bytes& signer_key, const crypto::Hasher& hasher);

/// Hashes the HCA once; the caller increments the hop count.
void saodv_advance(aodv::Packet& p, const crypto::Hasher& hasher);

// ---- SEAODV ----------------------------------------------------------------

/// Per-node PTK/GTK tables and the enhanced hello exchange.
class SeaodvKeys {
public:
    SeaodvKeys(NodeId self, const KeyAuthority& authority, Rng& rng);

    NodeId self() const { return self_; }
    const crypto::Bytes& own_gtk() const { return gtk_; }
    std::optional<crypto::Bytes> ptk(NodeId peer) const;
    std::optional<crypto::Bytes> gtk(NodeId peer) const;
    const std::map<NodeId, crypto::Bytes>& ptk_table() const { return ptk_; }
    const std::map<NodeId, crypto::Bytes>& gtk_table() const { return gtk_of_; }

    /// Hello-RREQ announcing (id, seed, column index); `to` may be a unicast target.
    aodv::Packet hello_request(NodeId to = NodeId::broadcast()) const;

    /// Processes a hello. For a request, derives the PTK with the sender and
    /// returns the hello-RREP carrying this node's GTK sealed under it. For a
    /// reply addressed here, derives the PTK, checks the tag and stores the
    /// sender's GTK.
    std::optional<aodv::Packet> on_hello(const aodv::Packet& p, Rng& rng);

    /// MAC with the own GTK for broadcast types (RREQ, RERR) or with the PTK
    /// shared with `next_hop` for RREP. False when the PTK is missing.
    bool protect(aodv::Packet& p, NodeId next_hop) const;

    /// Checks the tag against the claimed sender's key.
    Verdict verify(const aodv::Packet& p) const;

    /// Adds a PTK directly (tests, pre-established pairs).
    void install_pair(NodeId peer, const SeaodvKeys& other);

private:
    crypto::Bytes derive_ptk(NodeId peer) const;

    NodeId self_;
    const KeyAuthority* authority_;
    crypto::Bytes gtk_;
    std::map<NodeId, crypto::Bytes> ptk_;
    std::map<NodeId, crypto::Bytes> gtk_of_;
};

bool seaodv_uses_group_key(aodv::PacketType type);

/// Blom column index of a node (1-based).
inline int blom_index(NodeId n) { return n.value() + 1; }

}  // namespace meshsim::secure
