#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "meshsim/crypto/hash.hpp"

namespace meshsim::crypto {

/// Hop-count authenticator chain, generated backwards from a random seed:
/// elements h_N .. h_0 with h_i = H(h_{i+1}). The seed h_N authenticates hop
/// count 0; the anchor h_0 is signed by the originator.
class SaodvChain {
public:
    SaodvChain(const Hasher& hasher, Digest seed, int max_hops);

    int max_hops() const { return static_cast<int>(elements_.size()) - 1; }
    const Digest& element(int i) const { return elements_.at(static_cast<std::size_t>(i)); }
    const Digest& anchor() const { return elements_.front(); }
    const Digest& seed() const { return elements_.back(); }

private:
    std::vector<Digest> elements_;  // elements_[i] = h_i
};

SaodvChain saodv_chain_generate(const Hasher& hasher, Rng& rng, int max_hops);

/// h_{N-hc}; throws std::out_of_range for hc outside [0, N].
Digest hca_for_hopcount(const SaodvChain& chain, int hop_count);

inline Digest hca_advance(const Hasher& hasher, const Digest& hca) { return hasher(hca); }

/// True iff H^{N - hop_count}(hca) equals the anchor.
bool hca_verify(const Hasher& hasher, const Digest& anchor, int max_hops, int hop_count, const Digest& hca);

/// SEAD chain h_0 = x, h_i = H(h_{i-1}) for 1 <= i <= n, with n divisible by
/// the metric bound m. Update (seq i, metric j) is authenticated by element
/// k*m + j where k = n/m - i.
class SeadChain {
public:
    SeadChain(const Hasher& hasher, Digest x, int n, int m);

    int length() const { return n_; }
    int metric_bound() const { return m_; }

    /// Chain index for (sequence, metric); throws std::out_of_range when outside the chain.
    int index(int sequence, int metric) const;
    const Digest& element(int sequence, int metric) const { return elements_.at(static_cast<std::size_t>(index(sequence, metric))); }
    const Digest& at(int idx) const { return elements_.at(static_cast<std::size_t>(idx)); }

private:
    int n_;
    int m_;
    std::vector<Digest> elements_;
};

struct SeadValue {
    Digest element;
    int index = 0;
};

/// Accepts iff claim.index <= known.index and H^(known - claim)(claim) == known.
bool sead_verify(const Hasher& hasher, const SeadValue& known, const SeadValue& claim);

}  // namespace meshsim::crypto
