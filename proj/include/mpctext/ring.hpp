#pragma once

#include <cstdint>
#include <cstddef>
#include <span>
#include <vector>

#include "mpctext/errors.hpp"

namespace mpctext {

enum class Party : uint8_t { alice = 0, bob = 1 };

inline Party other(Party p) { return p == Party::alice ? Party::bob : Party::alice; }

inline const char* party_name(Party p) { return p == Party::alice ? "alice" : "bob"; }

// Ring Z_{2^Bits}. Only Z_2 and Z_{2^64} are supported: Z_2 carries the
// bitwise protocols, Z_{2^64} the arithmetic ones, and native uint64_t
// wrapping gives mod-2^64 for free.
template <int Bits>
struct Ring {
    static_assert(Bits == 1 || Bits == 64, "only Z_2 and Z_{2^64} are supported");

    static constexpr int bits = Bits;

    static constexpr uint64_t mask() {
        if constexpr (Bits == 64) {
            return ~uint64_t(0);
        } else {
            return (uint64_t(1) << Bits) - 1;
        }
    }

    static constexpr uint64_t reduce(uint64_t x) {
        if constexpr (Bits == 64) {
            return x;
        } else {
            return x & mask();
        }
    }
};

using Z2 = Ring<1>;
using Zq = Ring<64>;

// One party's additive share of a ring element. The party tag makes
// cross-party mixups a detectable usage error instead of silent garbage;
// the ring lives in the type.
template <int Bits>
struct Share {
    uint64_t value = 0;
    Party party = Party::alice;

    Share() = default;
    Share(uint64_t v, Party p) : value(Ring<Bits>::reduce(v)), party(p) {}
};

using BitShare = Share<1>;
using WordShare = Share<64>;

namespace detail {
template <int Bits>
inline void require_same_party(const Share<Bits>& a, const Share<Bits>& b, const char* op) {
    if (a.party != b.party)
        throw usage_error(std::string(op) + ": shares belong to different parties");
}
}  // namespace detail

// [[x+y]] from [[x]], [[y]]: add local shares, no communication.
template <int Bits>
Share<Bits> local_add(const Share<Bits>& a, const Share<Bits>& b) {
    detail::require_same_party(a, b, "local_add");
    return {Ring<Bits>::reduce(a.value + b.value), a.party};
}

template <int Bits>
Share<Bits> local_sub(const Share<Bits>& a, const Share<Bits>& b) {
    detail::require_same_party(a, b, "local_sub");
    return {Ring<Bits>::reduce(a.value - b.value), a.party};
}

// [[c*x]]: both parties scale their share by the public constant c.
template <int Bits>
Share<Bits> local_scalar_mul(uint64_t c, const Share<Bits>& a) {
    if (c > Ring<Bits>::mask())
        throw usage_error("local_scalar_mul: constant outside the ring");
    return {Ring<Bits>::reduce(c * a.value), a.party};
}

// [[x+c]]: Alice absorbs the public constant, Bob keeps his share.
template <int Bits>
Share<Bits> local_add_const(uint64_t c, const Share<Bits>& a) {
    if (c > Ring<Bits>::mask())
        throw usage_error("local_add_const: constant outside the ring");
    if (a.party == Party::alice) return {Ring<Bits>::reduce(a.value + c), a.party};
    return a;
}

// [[c-x]]: Alice computes c - x_A, Bob negates his share.
template <int Bits>
Share<Bits> local_sub_from_const(uint64_t c, const Share<Bits>& a) {
    if (c > Ring<Bits>::mask())
        throw usage_error("local_sub_from_const: constant outside the ring");
    if (a.party == Party::alice) return {Ring<Bits>::reduce(c - a.value), a.party};
    return {Ring<Bits>::reduce(uint64_t(0) - a.value), a.party};
}

template <int Bits>
uint64_t reconstruct(const Share<Bits>& a, const Share<Bits>& b) {
    if (a.party != Party::alice || b.party != Party::bob)
        throw usage_error("reconstruct: expects an alice share and a bob share");
    return Ring<Bits>::reduce(a.value + b.value);
}

// Input sharing against a dealt mask r: the owner keeps r as its share and
// sends c = x - r to the counterpart, whose share becomes c. The caller is
// responsible for drawing r from the dealer store exactly once.
template <int Bits>
struct MaskedSharing {
    Share<Bits> owner_share;
    uint64_t message;  // c = x - r, what goes on the wire
};

template <int Bits>
MaskedSharing<Bits> share_with_mask(uint64_t x, uint64_t r, Party owner) {
    if (x > Ring<Bits>::mask() || r > Ring<Bits>::mask())
        throw usage_error("share_with_mask: value or mask outside the ring");
    return {Share<Bits>{r, owner}, Ring<Bits>::reduce(x - r)};
}

// Ordered, fixed-length vector of shares with one party tag for the whole
// vector. Values are stored raw; element access materializes Share objects.
template <int Bits>
struct ShareVector {
    Party party = Party::alice;
    std::vector<uint64_t> values;

    ShareVector() = default;
    ShareVector(Party p, size_t n) : party(p), values(n, 0) {}
    ShareVector(Party p, std::vector<uint64_t> v) : party(p), values(std::move(v)) {
        for (auto& x : values) x = Ring<Bits>::reduce(x);
    }
    ShareVector(Party p, std::initializer_list<uint64_t> init) : party(p), values(init) {
        for (auto& x : values) x = Ring<Bits>::reduce(x);
    }

    size_t size() const { return values.size(); }

    Share<Bits> share(size_t i) const { return {values[i], party}; }

    void set(size_t i, const Share<Bits>& s) {
        if (s.party != party) throw usage_error("ShareVector::set: party mismatch");
        values[i] = Ring<Bits>::reduce(s.value);
    }
};

// Bitwise sharing of an ell-bit string, LSB first: bits.values[0] is x_1 in
// the x = x_ell ... x_1 convention.
using BitVectorShare = ShareVector<1>;
using WordVectorShare = ShareVector<64>;

// --- wire serialization ----------------------------------------------------
// Z_{2^64} shares travel as 8-byte little-endian words; Z_2 shares as one
// byte each (0/1).

inline void put_u64_le(std::vector<uint8_t>& out, uint64_t v) {
    for (int i = 0; i < 8; i++) out.push_back(uint8_t(v >> (8 * i)));
}

inline uint64_t get_u64_le(std::span<const uint8_t> in, size_t off) {
    uint64_t v = 0;
    for (int i = 0; i < 8; i++) v |= uint64_t(in[off + i]) << (8 * i);
    return v;
}

inline void put_u32_le(std::vector<uint8_t>& out, uint32_t v) {
    for (int i = 0; i < 4; i++) out.push_back(uint8_t(v >> (8 * i)));
}

inline uint32_t get_u32_le(std::span<const uint8_t> in, size_t off) {
    uint32_t v = 0;
    for (int i = 0; i < 4; i++) v |= uint32_t(in[off + i]) << (8 * i);
    return v;
}

template <int Bits>
void encode_values(std::vector<uint8_t>& out, std::span<const uint64_t> vals) {
    if constexpr (Bits == 1) {
        for (uint64_t v : vals) out.push_back(uint8_t(v & 1));
    } else {
        for (uint64_t v : vals) put_u64_le(out, v);
    }
}

template <int Bits>
std::vector<uint64_t> decode_values(std::span<const uint8_t> in, size_t count) {
    constexpr size_t stride = (Bits == 1) ? 1 : 8;
    if (in.size() != count * stride)
        throw transport_error("decode_values: payload size does not match the expected count");
    std::vector<uint64_t> vals(count);
    for (size_t i = 0; i < count; i++) {
        if constexpr (Bits == 1) {
            if (in[i] > 1) throw transport_error("decode_values: Z_2 share byte not 0/1");
            vals[i] = in[i];
        } else {
            vals[i] = get_u64_le(in, i * 8);
        }
    }
    return vals;
}

}  // namespace mpctext
