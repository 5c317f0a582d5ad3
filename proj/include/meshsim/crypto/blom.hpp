#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "meshsim/core/rng.hpp"

namespace meshsim::crypto {

/// Arithmetic in GF(q) for prime q < 2^63.
namespace gf {
std::uint64_t add(std::uint64_t a, std::uint64_t b, std::uint64_t q);
std::uint64_t mul(std::uint64_t a, std::uint64_t b, std::uint64_t q);
std::uint64_t pow(std::uint64_t base, std::uint64_t exp, std::uint64_t q);
}  // namespace gf

bool is_prime(std::uint64_t n);
bool is_primitive_element(std::uint64_t g, std::uint64_t q);
/// Smallest primitive element of GF(q); q must be prime.
std::uint64_t smallest_primitive_element(std::uint64_t q);

/// Public part of a Blom instance. The (t+1) x N matrix P is a Vandermonde
/// matrix generated from one field element, so column i is
/// (1, g^i, g^{2i}, ..., g^{ti}) mod q and can be rebuilt from (g, i, q).
struct BlomPublic {
    std::uint64_t q = 0;
    int t = 0;
    std::uint64_t g = 0;
    int n = 0;

    /// Column for 1-based node index `i`.
    std::vector<std::uint64_t> column(int i) const;
};

struct BlomPrivateRow {
    int owner = 0;  // 1-based index
    std::vector<std::uint64_t> row;
};

/// Symmetric (t+1) x (t+1) matrix over GF(q), row-major.
struct SymmetricMatrix {
    int dim = 0;
    std::vector<std::uint64_t> cells;
    std::uint64_t at(int r, int c) const { return cells[static_cast<std::size_t>(r * dim + c)]; }
};

/// Result of the central authority's setup. The secret matrix is not kept.
struct BlomSetup {
    BlomPublic pub;
    std::vector<BlomPrivateRow> rows;  // rows[i-1] belongs to node index i
};

/// Validates (q, t, n, g): q prime, q > n, 1 <= t+1 <= n, g yields distinct columns.
void blom_validate(const BlomPublic& pub);

/// Random symmetric S, A = (S P)^T. If `g` is empty the smallest primitive element is used.
BlomSetup blom_setup(Rng& rng, int n, int t, std::uint64_t q, std::optional<std::uint64_t> g = std::nullopt);

/// Same computation with a caller-chosen secret matrix.
BlomSetup blom_setup_with_matrix(const BlomPublic& pub, const SymmetricMatrix& secret);

/// Dot product of a private row and a peer's public column, mod q.
std::uint64_t blom_pairwise_key(std::span<const std::uint64_t> row, std::span<const std::uint64_t> column, std::uint64_t q);

}  // namespace meshsim::crypto
