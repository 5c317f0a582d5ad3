#pragma once

#include <cstdint>
#include <random>

namespace meshsim {

/// Independent random stream purposes. A node's streams are derived from
/// (run seed, node id, purpose) so adding a node never shifts another
/// node's draws.
enum class StreamPurpose : std::uint32_t {
    Radio = 1,
    Jitter = 2,
    Adversary = 3,
    Application = 4,
    Crypto = 5,
    Setup = 6,
    Workload = 7,
    Detection = 8,
};

/// splitmix64 finalizer, used for seed derivation.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Deterministic 64-bit stream. Distributions are computed by hand rather
/// than through <random> distribution objects, whose output is not
/// specified across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(mix64(seed)) {}

    static Rng derive(std::uint64_t run_seed, std::int64_t stream, StreamPurpose purpose) {
        std::uint64_t s = mix64(run_seed);
        s = mix64(s ^ static_cast<std::uint64_t>(stream + 0x10000));
        s = mix64(s ^ static_cast<std::uint64_t>(purpose));
        return Rng(s);
    }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 bits of precision.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform integer in [lo, hi] (inclusive), unbiased via rejection.
    std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi) {
        const std::uint64_t span = hi - lo;
        if (span == ~std::uint64_t{0}) return engine_();
        const std::uint64_t range = span + 1;
        const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % range);
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return lo + x % range;
    }

    bool bernoulli(double p) {
        if (p <= 0.0) return false;
        if (p >= 1.0) return true;
        return uniform01() < p;
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace meshsim
