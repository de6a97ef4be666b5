#pragma once

#include <cmath>
#include <cstdint>

#include "mpctext/errors.hpp"

namespace mpctext {

// Two's-complement fixed-point embedding of a real v as round(v * 2^f) in
// Z_{2^64}. Values are capped at |raw| < 2^(63-f), leaving enough headroom
// that a sum of up to 2^f encoded terms cannot cross the sign bit.
struct FixedPoint {
    uint64_t raw = 0;
    int f = 16;
};

inline void validate_fraction_bits(int f) {
    if (f < 1 || f > 32) throw encoding_error("fraction_bits out of range [1,32]");
}

inline FixedPoint encode_fp(double v, int f) {
    validate_fraction_bits(f);
    if (!std::isfinite(v)) throw encoding_error("encode_fp: non-finite value");
    const long double scaled = std::roundl(static_cast<long double>(v) * powl(2.0L, f));
    const long double limit = powl(2.0L, 63 - f);
    if (scaled >= limit || scaled <= -limit)
        throw encoding_error("encode_fp: value out of range for f=" + std::to_string(f));
    const int64_t s = static_cast<int64_t>(scaled);
    return {static_cast<uint64_t>(s), f};
}

inline int64_t fp_signed(const FixedPoint& x) { return static_cast<int64_t>(x.raw); }

inline double decode_fp(const FixedPoint& x) {
    validate_fraction_bits(x.f);
    return double(fp_signed(x)) / double(uint64_t(1) << x.f);
}

}  // namespace mpctext
