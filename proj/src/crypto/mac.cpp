#include "meshsim/crypto/mac.hpp"

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>

#include <algorithm>
#include <stdexcept>

namespace meshsim::crypto {

namespace {

std::array<std::uint8_t, 32> hmac_sha256(std::span<const std::uint8_t> key, std::span<const std::uint8_t> message) {
    std::array<std::uint8_t, 32> out{};
    unsigned int len = 0;
    static const std::uint8_t kEmpty = 0;
    const std::uint8_t* key_ptr = key.empty() ? &kEmpty : key.data();
    if (HMAC(EVP_sha256(), key_ptr, static_cast<int>(key.size()), message.data(), message.size(), out.data(), &len) == nullptr ||
        len != 32) {
        throw std::runtime_error("HMAC-SHA256 failed");
    }
    return out;
}

}  // namespace

MacTag mac_compute(std::span<const std::uint8_t> key, std::span<const std::uint8_t> message, std::size_t tag_bytes) {
    if (tag_bytes == 0 || tag_bytes > 32) throw std::invalid_argument("tag width must be in [1, 32] bytes");
    MacTag tag;
    const auto full = hmac_sha256(key, message);
    std::copy_n(full.begin(), tag_bytes, tag.bytes.begin());
    tag.size = tag_bytes;
    return tag;
}

bool mac_verify(std::span<const std::uint8_t> key, std::span<const std::uint8_t> message, const MacTag& tag) {
    if (tag.size == 0 || tag.size > 32) return false;
    const MacTag expected = mac_compute(key, message, tag.size);
    return CRYPTO_memcmp(expected.bytes.data(), tag.bytes.data(), tag.size) == 0;
}

Bytes keystream_xor(std::span<const std::uint8_t> key, std::uint64_t nonce, std::span<const std::uint8_t> data) {
    Bytes out(data.begin(), data.end());
    std::array<std::uint8_t, 16> counter_block{};
    for (int i = 0; i < 8; ++i) counter_block[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(nonce >> (56 - 8 * i));
    for (std::size_t offset = 0, block = 0; offset < out.size(); offset += 32, ++block) {
        for (int i = 0; i < 8; ++i) counter_block[8 + static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(block >> (56 - 8 * i));
        const auto ks = hmac_sha256(key, counter_block);
        for (std::size_t i = 0; i < 32 && offset + i < out.size(); ++i) out[offset + i] ^= ks[i];
    }
    return out;
}

Bytes key_from_field_element(std::uint64_t value) {
    Bytes key(8);
    for (int i = 0; i < 8; ++i) key[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(value >> (56 - 8 * i));
    return key;
}

}  // namespace meshsim::crypto
