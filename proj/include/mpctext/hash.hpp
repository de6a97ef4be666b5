#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include <openssl/evp.h>

#include "mpctext/errors.hpp"

namespace mpctext {

inline constexpr size_t kDigestBytes = 28;  // SHA-224

inline std::array<uint8_t, kDigestBytes> sha224(std::span<const uint8_t> data) {
    std::array<uint8_t, kDigestBytes> out{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha224(), nullptr) != 1 ||
        len != kDigestBytes)
        throw error("sha224: digest computation failed");
    return out;
}

inline std::array<uint8_t, kDigestBytes> sha224(std::string_view s) {
    return sha224(std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(s.data()), s.size()));
}

// Carter-Wegman universal hash mapping a word to an l-bit token id:
//   N  = SHA-224(utf8 bytes), read as a big-endian unsigned integer
//   id = ((a*N + b) mod p) mod 2^l
// The big-endian digest interpretation and the final mod-2^l reduction are
// normative for cross-implementation compatibility.
struct HashParams {
    uint64_t p = 1'301'081;
    uint64_t a = 972;
    uint64_t b = 52'097;
    int l = 13;

    void validate() const {
        if (p < 2) throw config_error("HashParams: p must be a prime >= 2");
        if (a >= p || b >= p) throw config_error("HashParams: a and b must be less than p");
        if (l < 1 || l > 30) throw config_error("HashParams: token bit-length out of range [1,30]");
    }
};

inline uint32_t hash_token(std::string_view word, const HashParams& hp) {
    hp.validate();
    const auto digest = sha224(word);
    // N mod p by Horner over the big-endian digest bytes; p < 2^21 so the
    // accumulator never overflows.
    uint64_t acc = 0;
    for (uint8_t byte : digest) acc = (acc * 256 + byte) % hp.p;
    const uint64_t h = (hp.a * acc + hp.b) % hp.p;
    return uint32_t(h & ((uint64_t(1) << hp.l) - 1));
}

}  // namespace mpctext
