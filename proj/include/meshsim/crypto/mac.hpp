#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace meshsim::crypto {

using Bytes = std::vector<std::uint8_t>;

inline constexpr std::size_t kDefaultTagBytes = 8;

/// Truncated HMAC-SHA256 tag.
struct MacTag {
    std::array<std::uint8_t, 32> bytes{};
    std::size_t size = 0;

    std::span<const std::uint8_t> view() const { return {bytes.data(), size}; }
    friend bool operator==(const MacTag& a, const MacTag& b) { return a.size == b.size && a.bytes == b.bytes; }
};

MacTag mac_compute(std::span<const std::uint8_t> key, std::span<const std::uint8_t> message,
                   std::size_t tag_bytes = kDefaultTagBytes);

/// Constant-time comparison against a freshly computed tag.
bool mac_verify(std::span<const std::uint8_t> key, std::span<const std::uint8_t> message, const MacTag& tag);

/// XOR keystream cipher: block b of the keystream is HMAC(key, nonce || b).
/// Encryption and decryption are the same operation.
Bytes keystream_xor(std::span<const std::uint8_t> key, std::uint64_t nonce, std::span<const std::uint8_t> data);

/// Big-endian encoding of a field element, used as PTK key material.
Bytes key_from_field_element(std::uint64_t value);

}  // namespace meshsim::crypto
