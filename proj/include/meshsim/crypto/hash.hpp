#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "meshsim/core/rng.hpp"

namespace meshsim::crypto {

inline constexpr std::size_t kMaxDigestBytes = 32;

/// A hash output of up to 256 bits. Width is carried with the value so
/// truncated test configurations and full-width runs share one type.
class Digest {
public:
    Digest() = default;
    Digest(std::span<const std::uint8_t> bytes);

    std::size_t size() const { return size_; }
    std::span<const std::uint8_t> bytes() const { return {bytes_.data(), size_}; }
    std::span<std::uint8_t> mutable_bytes() { return {bytes_.data(), size_}; }
    std::string hex() const;

    friend bool operator==(const Digest& a, const Digest& b) {
        return a.size_ == b.size_ && a.bytes_ == b.bytes_;
    }

private:
    std::array<std::uint8_t, kMaxDigestBytes> bytes_{};
    std::size_t size_ = 0;
};

/// One-way function H: {0,1}* -> {0,1}^rho, SHA-256 truncated to `width_bytes`.
class Hasher {
public:
    explicit Hasher(std::size_t width_bytes = kMaxDigestBytes);

    std::size_t width() const { return width_; }
    Digest operator()(std::span<const std::uint8_t> data) const;
    Digest operator()(const Digest& d) const { return (*this)(d.bytes()); }

    /// Applies H `times` times.
    Digest iterate(Digest d, std::size_t times) const;

    /// A uniformly random value of this hasher's width.
    Digest random(Rng& rng) const;

private:
    std::size_t width_;
};

std::array<std::uint8_t, 32> sha256(std::span<const std::uint8_t> data);

}  // namespace meshsim::crypto
