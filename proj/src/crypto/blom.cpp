#include "meshsim/crypto/blom.hpp"

#include <set>
#include <stdexcept>
#include <string>

namespace meshsim::crypto {

namespace gf {

std::uint64_t add(std::uint64_t a, std::uint64_t b, std::uint64_t q) {
    const unsigned __int128 s = static_cast<unsigned __int128>(a) + b;
    return static_cast<std::uint64_t>(s % q);
}

std::uint64_t mul(std::uint64_t a, std::uint64_t b, std::uint64_t q) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(a) * b) % q);
}

std::uint64_t pow(std::uint64_t base, std::uint64_t exp, std::uint64_t q) {
    std::uint64_t result = 1 % q;
    base %= q;
    while (exp > 0) {
        if (exp & 1U) result = mul(result, base, q);
        base = mul(base, base, q);
        exp >>= 1U;
    }
    return result;
}

}  // namespace gf

bool is_prime(std::uint64_t n) {
    if (n < 2) return false;
    for (std::uint64_t p : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL, 31ULL, 37ULL}) {
        if (n % p == 0) return n == p;
    }
    // Deterministic Miller-Rabin for 64-bit inputs.
    std::uint64_t d = n - 1;
    int s = 0;
    while ((d & 1U) == 0) {
        d >>= 1U;
        ++s;
    }
    for (std::uint64_t a : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL, 31ULL, 37ULL}) {
        std::uint64_t x = gf::pow(a, d, n);
        if (x == 1 || x == n - 1) continue;
        bool composite = true;
        for (int r = 1; r < s; ++r) {
            x = gf::mul(x, x, n);
            if (x == n - 1) {
                composite = false;
                break;
            }
        }
        if (composite) return false;
    }
    return true;
}

namespace {

std::vector<std::uint64_t> prime_factors(std::uint64_t n) {
    std::vector<std::uint64_t> out;
    for (std::uint64_t p = 2; p * p <= n; ++p) {
        if (n % p == 0) {
            out.push_back(p);
            while (n % p == 0) n /= p;
        }
    }
    if (n > 1) out.push_back(n);
    return out;
}

}  // namespace

bool is_primitive_element(std::uint64_t g, std::uint64_t q) {
    if (!is_prime(q) || g % q == 0) return false;
    if (q == 2) return g % q == 1;
    for (std::uint64_t p : prime_factors(q - 1)) {
        if (gf::pow(g, (q - 1) / p, q) == 1) return false;
    }
    return true;
}

std::uint64_t smallest_primitive_element(std::uint64_t q) {
    if (!is_prime(q)) throw std::invalid_argument("non-prime modulus");
    for (std::uint64_t g = 1; g < q; ++g) {
        if (is_primitive_element(g, q)) return g;
    }
    throw std::logic_error("no primitive element found");
}

std::vector<std::uint64_t> BlomPublic::column(int i) const {
    std::vector<std::uint64_t> col(static_cast<std::size_t>(t) + 1);
    const std::uint64_t step = gf::pow(g, static_cast<std::uint64_t>(i), q);
    std::uint64_t v = 1 % q;
    for (auto& c : col) {
        c = v;
        v = gf::mul(v, step, q);
    }
    return col;
}

void blom_validate(const BlomPublic& pub) {
    if (!is_prime(pub.q)) throw std::invalid_argument("non-prime modulus q=" + std::to_string(pub.q));
    if (pub.q <= static_cast<std::uint64_t>(pub.n)) throw std::invalid_argument("modulus q must exceed network size N");
    if (pub.t < 0 || pub.t + 1 > pub.n) throw std::invalid_argument("security parameter needs 1 <= t+1 <= N");
    if (pub.g == 0 || pub.g >= pub.q) throw std::invalid_argument("seed element must lie in [1, q-1]");
    std::set<std::uint64_t> seen;
    for (int i = 1; i <= pub.n; ++i) {
        if (!seen.insert(gf::pow(pub.g, static_cast<std::uint64_t>(i), pub.q)).second) {
            throw std::invalid_argument("seed element does not generate distinct columns for N nodes");
        }
    }
}

BlomSetup blom_setup_with_matrix(const BlomPublic& pub, const SymmetricMatrix& secret) {
    blom_validate(pub);
    const int dim = pub.t + 1;
    if (secret.dim != dim || secret.cells.size() != static_cast<std::size_t>(dim * dim)) {
        throw std::invalid_argument("secret matrix must be (t+1) x (t+1)");
    }
    for (int r = 0; r < dim; ++r) {
        for (int c = 0; c < dim; ++c) {
            if (secret.at(r, c) != secret.at(c, r)) throw std::invalid_argument("secret matrix must be symmetric");
        }
    }
    BlomSetup setup{pub, {}};
    setup.rows.reserve(static_cast<std::size_t>(pub.n));
    // Row i of A = (S P)^T is (S * column_i)^T.
    for (int i = 1; i <= pub.n; ++i) {
        const auto col = pub.column(i);
        BlomPrivateRow row{i, std::vector<std::uint64_t>(static_cast<std::size_t>(dim), 0)};
        for (int r = 0; r < dim; ++r) {
            std::uint64_t acc = 0;
            for (int c = 0; c < dim; ++c) acc = gf::add(acc, gf::mul(secret.at(r, c) % pub.q, col[static_cast<std::size_t>(c)], pub.q), pub.q);
            row.row[static_cast<std::size_t>(r)] = acc;
        }
        setup.rows.push_back(std::move(row));
    }
    return setup;
}

BlomSetup blom_setup(Rng& rng, int n, int t, std::uint64_t q, std::optional<std::uint64_t> g) {
    if (!is_prime(q)) throw std::invalid_argument("non-prime modulus q=" + std::to_string(q));
    BlomPublic pub{q, t, g ? *g : smallest_primitive_element(q), n};
    blom_validate(pub);
    const int dim = t + 1;
    SymmetricMatrix secret{dim, std::vector<std::uint64_t>(static_cast<std::size_t>(dim * dim))};
    for (int r = 0; r < dim; ++r) {
        for (int c = r; c < dim; ++c) {
            const std::uint64_t v = rng.uniform_int(0, q - 1);
            secret.cells[static_cast<std::size_t>(r * dim + c)] = v;
            secret.cells[static_cast<std::size_t>(c * dim + r)] = v;
        }
    }
    return blom_setup_with_matrix(pub, secret);
}

std::uint64_t blom_pairwise_key(std::span<const std::uint64_t> row, std::span<const std::uint64_t> column, std::uint64_t q) {
    if (row.size() != column.size()) throw std::invalid_argument("Blom row/column length mismatch");
    std::uint64_t acc = 0;
    for (std::size_t i = 0; i < row.size(); ++i) acc = gf::add(acc, gf::mul(row[i], column[i], q), q);
    return acc;
}

}  // namespace meshsim::crypto
