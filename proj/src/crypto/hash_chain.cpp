#include "meshsim/crypto/hash_chain.hpp"

#include <stdexcept>

namespace meshsim::crypto {

SaodvChain::SaodvChain(const Hasher& hasher, Digest seed, int max_hops) {
    if (max_hops < 1) throw std::invalid_argument("hash chain needs at least two elements (N >= 1)");
    elements_.resize(static_cast<std::size_t>(max_hops) + 1);
    elements_.back() = seed;
    for (int i = max_hops - 1; i >= 0; --i) {
        elements_[static_cast<std::size_t>(i)] = hasher(elements_[static_cast<std::size_t>(i) + 1]);
    }
}

SaodvChain saodv_chain_generate(const Hasher& hasher, Rng& rng, int max_hops) {
    if (max_hops < 1) throw std::invalid_argument("hash chain needs at least two elements (N >= 1)");
    return SaodvChain(hasher, hasher.random(rng), max_hops);
}

Digest hca_for_hopcount(const SaodvChain& chain, int hop_count) {
    if (hop_count < 0 || hop_count > chain.max_hops()) {
        throw std::out_of_range("hop count outside [0, N]");
    }
    return chain.element(chain.max_hops() - hop_count);
}

bool hca_verify(const Hasher& hasher, const Digest& anchor, int max_hops, int hop_count, const Digest& hca) {
    if (max_hops < 1 || hop_count < 0 || hop_count > max_hops) return false;
    return hasher.iterate(hca, static_cast<std::size_t>(max_hops - hop_count)) == anchor;
}

SeadChain::SeadChain(const Hasher& hasher, Digest x, int n, int m) : n_(n), m_(m) {
    if (m < 1 || n < m || n % m != 0) throw std::invalid_argument("SEAD chain length must be a positive multiple of m");
    elements_.reserve(static_cast<std::size_t>(n) + 1);
    elements_.push_back(x);
    for (int i = 1; i <= n; ++i) elements_.push_back(hasher(elements_.back()));
}

int SeadChain::index(int sequence, int metric) const {
    if (metric < 0 || metric > m_ - 1) throw std::out_of_range("metric outside [0, m-1]");
    const int k = n_ / m_ - sequence;
    const int idx = k * m_ + metric;
    if (k < 0 || idx > n_) throw std::out_of_range("sequence number outside the chain");
    return idx;
}

bool sead_verify(const Hasher& hasher, const SeadValue& known, const SeadValue& claim) {
    if (claim.index < 0 || claim.index > known.index) return false;
    return hasher.iterate(claim.element, static_cast<std::size_t>(known.index - claim.index)) == known.element;
}

}  // namespace meshsim::crypto
