#include "meshsim/crypto/hash.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <stdexcept>

namespace meshsim::crypto {

Digest::Digest(std::span<const std::uint8_t> bytes) {
    if (bytes.size() > kMaxDigestBytes) throw std::invalid_argument("digest longer than 256 bits");
    std::copy(bytes.begin(), bytes.end(), bytes_.begin());
    size_ = bytes.size();
}

std::string Digest::hex() const {
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(size_ * 2);
    for (std::size_t i = 0; i < size_; ++i) {
        out.push_back(kHex[bytes_[i] >> 4]);
        out.push_back(kHex[bytes_[i] & 0xf]);
    }
    return out;
}

std::array<std::uint8_t, 32> sha256(std::span<const std::uint8_t> data) {
    std::array<std::uint8_t, 32> out{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 || len != 32) {
        throw std::runtime_error("EVP_Digest(sha256) failed");
    }
    return out;
}

Hasher::Hasher(std::size_t width_bytes) : width_(width_bytes) {
    if (width_bytes == 0 || width_bytes > kMaxDigestBytes) {
        throw std::invalid_argument("hash width must be in [1, 32] bytes");
    }
}

Digest Hasher::operator()(std::span<const std::uint8_t> data) const {
    const auto full = sha256(data);
    return Digest(std::span<const std::uint8_t>(full.data(), width_));
}

Digest Hasher::iterate(Digest d, std::size_t times) const {
    for (std::size_t i = 0; i < times; ++i) d = (*this)(d);
    return d;
}

Digest Hasher::random(Rng& rng) const {
    std::array<std::uint8_t, kMaxDigestBytes> buf{};
    for (std::size_t i = 0; i < width_; i += 8) {
        std::uint64_t w = rng.next_u64();
        for (std::size_t b = 0; b < 8 && i + b < width_; ++b) buf[i + b] = static_cast<std::uint8_t>(w >> (8 * b));
    }
    return Digest(std::span<const std::uint8_t>(buf.data(), width_));
}

}  // namespace meshsim::crypto
