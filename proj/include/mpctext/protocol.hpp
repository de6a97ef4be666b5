#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "mpctext/dealer.hpp"
#include "mpctext/ring.hpp"
#include "mpctext/transport.hpp"

namespace mpctext {

// Who learns an opened value (or the final label).
enum class DisclosurePolicy : uint8_t { to_bob = 0, to_alice = 1, to_both = 2, keep_shared = 3 };

inline const char* policy_name(DisclosurePolicy p) {
    switch (p) {
        case DisclosurePolicy::to_bob: return "bob";
        case DisclosurePolicy::to_alice: return "alice";
        case DisclosurePolicy::to_both: return "both";
        default: return "shared";
    }
}

struct OpCounters {
    uint64_t eq_tests = 0;
};

// One party's view of a running session: its transport, its half of the
// dealt randomness, and instrumentation. Strictly single-threaded; both
// parties must issue the same protocol calls in the same order, which the
// transport sequence numbers enforce.
struct ProtocolContext {
    Party party;
    Transport* transport;
    BundleView rnd;
    OpCounters ops;

    ProtocolContext(Transport& t, const RandomnessBundle& bundle)
        : party(t.party()), transport(&t), rnd(bundle) {
        if (bundle.party != party)
            throw usage_error("ProtocolContext: bundle was dealt to the other party");
    }
};

namespace detail {

template <int Bits>
void require_mine(const ProtocolContext& ctx, const ShareVector<Bits>& v, const char* op) {
    if (v.party != ctx.party)
        throw usage_error(std::string(op) + ": share vector belongs to the other party");
}

}  // namespace detail

// --- Beaver multiplication -----------------------------------------------------

// Elementwise product of two share vectors. One triple per element, one
// communication round for the whole batch (both parties open d = x-a and
// e = y-b); empty batches are free. Recombination: z = c + e*a + d*b, with
// Alice (by convention) adding the public d*e term.
template <int Bits>
ShareVector<Bits> mul_batch(ProtocolContext& ctx, const ShareVector<Bits>& x,
                            const ShareVector<Bits>& y) {
    using R = Ring<Bits>;
    detail::require_mine(ctx, x, "mul_batch");
    detail::require_mine(ctx, y, "mul_batch");
    if (x.size() != y.size()) throw usage_error("mul_batch: length mismatch");
    const size_t k = x.size();
    if (k == 0) return ShareVector<Bits>(ctx.party, 0);

    std::vector<uint64_t> a(k), b(k), c(k), open(2 * k);
    for (size_t i = 0; i < k; i++) {
        const auto t = ctx.rnd.template draw_triple<Bits>();
        a[i] = t.a, b[i] = t.b, c[i] = t.c;
        open[i] = R::reduce(x.values[i] - t.a);
        open[k + i] = R::reduce(y.values[i] - t.b);
    }

    std::vector<uint8_t> payload;
    encode_values<Bits>(payload, open);
    const auto in = ctx.transport->exchange(payload);
    const auto theirs = decode_values<Bits>(in, 2 * k);

    ShareVector<Bits> z(ctx.party, k);
    for (size_t i = 0; i < k; i++) {
        const uint64_t d = R::reduce(open[i] + theirs[i]);
        const uint64_t e = R::reduce(open[k + i] + theirs[k + i]);
        uint64_t zi = c[i] + e * a[i] + d * b[i];
        if (ctx.party == Party::alice) zi += d * e;
        z.values[i] = R::reduce(zi);
    }
    return z;
}

template <int Bits>
Share<Bits> secure_mul(ProtocolContext& ctx, const Share<Bits>& x, const Share<Bits>& y) {
    ShareVector<Bits> xv(ctx.party, {x.value}), yv(ctx.party, {y.value});
    if (x.party != ctx.party || y.party != ctx.party)
        throw usage_error("secure_mul: share belongs to the other party");
    return mul_batch(ctx, xv, yv).share(0);
}

// <u,v> via batched Beaver openings plus a local sum; one round, k triples.
template <int Bits>
Share<Bits> secure_inner_product(ProtocolContext& ctx, const ShareVector<Bits>& u,
                                 const ShareVector<Bits>& v) {
    if (u.size() != v.size()) throw usage_error("secure_inner_product: length mismatch");
    if (u.size() == 0) return Share<Bits>{0, ctx.party};
    const auto prods = mul_batch(ctx, u, v);
    uint64_t acc = 0;
    for (uint64_t p : prods.values) acc += p;
    return Share<Bits>{Ring<Bits>::reduce(acc), ctx.party};
}

// --- masked input sharing ------------------------------------------------------

// Both parties share their own private vectors in one round: each consumes
// one dealt mask per element, sends c = x - r, and keeps r as its share; the
// received c values become its shares of the peer's inputs. Returns
// (shares of Alice's values, shares of Bob's values).
template <int Bits>
std::pair<ShareVector<Bits>, ShareVector<Bits>> share_inputs_bidir(
    ProtocolContext& ctx, std::span<const uint64_t> mine, size_t alice_count, size_t bob_count) {
    const size_t my_count = ctx.party == Party::alice ? alice_count : bob_count;
    const size_t other_count = ctx.party == Party::alice ? bob_count : alice_count;
    if (mine.size() != my_count)
        throw usage_error("share_inputs_bidir: input size disagrees with declared count");

    std::vector<uint64_t> own(my_count);
    std::vector<uint8_t> payload;
    payload.reserve(my_count * (Bits == 1 ? 1 : 8));
    for (size_t i = 0; i < my_count; i++) {
        const uint64_t r = ctx.rnd.template draw_mask<Bits>();
        const auto sh = share_with_mask<Bits>(Ring<Bits>::reduce(mine[i]), r, ctx.party);
        own[i] = sh.owner_share.value;
        encode_values<Bits>(payload, std::span<const uint64_t>(&sh.message, 1));
    }

    const auto in = ctx.transport->exchange(payload);
    auto theirs = decode_values<Bits>(in, other_count);

    ShareVector<Bits> alice_vals(ctx.party, 0), bob_vals(ctx.party, 0);
    if (ctx.party == Party::alice) {
        alice_vals.values = std::move(own);
        bob_vals.values = std::move(theirs);
    } else {
        alice_vals.values = std::move(theirs);
        bob_vals.values = std::move(own);
    }
    return {std::move(alice_vals), std::move(bob_vals)};
}

// One-directional variant: `owner` shares `values` (ignored on the other
// side); still one lockstep round.
template <int Bits>
ShareVector<Bits> share_from(ProtocolContext& ctx, Party owner, std::span<const uint64_t> values,
                             size_t count) {
    auto [a, b] = owner == Party::alice
                      ? share_inputs_bidir<Bits>(ctx, ctx.party == owner ? values : values.subspan(0, 0),
                                                 count, 0)
                      : share_inputs_bidir<Bits>(ctx, ctx.party == owner ? values : values.subspan(0, 0),
                                                 0, count);
    return owner == Party::alice ? std::move(a) : std::move(b);
}

// --- openings -------------------------------------------------------------------

inline bool discloses_to(DisclosurePolicy policy, Party p) {
    return policy == DisclosurePolicy::to_both ||
           (policy == DisclosurePolicy::to_alice && p == Party::alice) ||
           (policy == DisclosurePolicy::to_bob && p == Party::bob);
}

// Opens a batch of shares to one or both parties (one round). keep_shared
// performs no communication and returns nothing. The non-learning party
// also returns nothing.
template <int Bits>
std::optional<std::vector<uint64_t>> open_batch(ProtocolContext& ctx,
                                                const ShareVector<Bits>& s,
                                                DisclosurePolicy policy) {
    detail::require_mine(ctx, s, "open_batch");
    if (policy == DisclosurePolicy::keep_shared) return std::nullopt;
    const bool peer_learns = discloses_to(policy, other(ctx.party));
    const bool i_learn = discloses_to(policy, ctx.party);

    std::vector<uint8_t> payload;
    if (peer_learns) encode_values<Bits>(payload, s.values);
    const auto in = ctx.transport->exchange(payload);
    if (!i_learn) {
        if (!in.empty()) throw transport_error("open_batch: unexpected payload");
        return std::nullopt;
    }
    auto theirs = decode_values<Bits>(in, s.size());
    for (size_t i = 0; i < s.size(); i++)
        theirs[i] = Ring<Bits>::reduce(theirs[i] + s.values[i]);
    return theirs;
}

// --- equality -------------------------------------------------------------------

// Batch equality test over `width`-bit strings packed LSB-first in flat
// vectors. Output bit z_t == 1 iff x_t == y_t. Per item: width-1 Z_2 triples
// in a binary product tree, ceil(log2 width) rounds shared by the batch.
inline ShareVector<1> equality_batch(ProtocolContext& ctx, const ShareVector<1>& xs,
                                     const ShareVector<1>& ys, size_t width) {
    detail::require_mine(ctx, xs, "equality_batch");
    detail::require_mine(ctx, ys, "equality_batch");
    if (width == 0) throw usage_error("equality_batch: zero width");
    if (xs.size() != ys.size() || xs.size() % width != 0)
        throw usage_error("equality_batch: size not a multiple of the item width");
    const size_t k = xs.size() / width;
    ctx.ops.eq_tests += k;

    // r_i = x_i + y_i + 1; equality means all r_i are 1.
    std::vector<uint64_t> cur(xs.size());
    const uint64_t flip = ctx.party == Party::alice ? 1 : 0;
    for (size_t i = 0; i < xs.size(); i++)
        cur[i] = (xs.values[i] ^ ys.values[i]) ^ flip;

    // Product tree across each item's bits, all items in lockstep.
    size_t w = width;
    while (w > 1) {
        const size_t half = w / 2;
        const bool odd = w % 2;
        ShareVector<1> lhs(ctx.party, k * half), rhs(ctx.party, k * half);
        for (size_t t = 0; t < k; t++)
            for (size_t i = 0; i < half; i++) {
                lhs.values[t * half + i] = cur[t * w + 2 * i];
                rhs.values[t * half + i] = cur[t * w + 2 * i + 1];
            }
        const auto prod = mul_batch<1>(ctx, lhs, rhs);
        std::vector<uint64_t> next(k * (half + odd));
        for (size_t t = 0; t < k; t++) {
            for (size_t i = 0; i < half; i++)
                next[t * (half + odd) + i] = prod.values[t * half + i];
            if (odd) next[t * (half + odd) + half] = cur[t * w + w - 1];
        }
        cur = std::move(next);
        w = half + odd;
    }
    return ShareVector<1>(ctx.party, std::move(cur));
}

inline BitShare secure_equality(ProtocolContext& ctx, const BitVectorShare& x,
                                const BitVectorShare& y) {
    if (x.size() != y.size()) throw usage_error("secure_equality: length mismatch");
    if (x.size() == 0) throw usage_error("secure_equality: empty bit strings");
    return equality_batch(ctx, x, y, x.size()).share(0);
}

// --- comparison -----------------------------------------------------------------

// Batch unsigned comparison: c_t == 1 iff x_t >= y_t. Circuit: per item,
// w = x XOR y; suffix-OR u from the MSB down by doubling (so u_i says "some
// higher-or-equal bit differs"); d_i = u_i XOR u_{i+1} isolates the most
// significant differing bit; c = (1 XOR u_LSB) XOR sum_i d_i*x_i.
// ceil(log2 width)+1 rounds; per item sum_{s<width}(width-s) + width triples.
inline ShareVector<1> compare_geq_batch(ProtocolContext& ctx, const ShareVector<1>& xs,
                                        const ShareVector<1>& ys, size_t width) {
    detail::require_mine(ctx, xs, "compare_geq_batch");
    detail::require_mine(ctx, ys, "compare_geq_batch");
    if (width == 0) throw usage_error("compare_geq_batch: zero width");
    if (xs.size() != ys.size() || xs.size() % width != 0)
        throw usage_error("compare_geq_batch: size not a multiple of the item width");
    const size_t k = xs.size() / width;

    std::vector<uint64_t> u(xs.size());
    for (size_t i = 0; i < xs.size(); i++) u[i] = xs.values[i] ^ ys.values[i];

    // Suffix OR towards the MSB: u[i] |= u[i+s], doubling s.
    for (size_t s = 1; s < width; s <<= 1) {
        const size_t span = width - s;
        ShareVector<1> lhs(ctx.party, k * span), rhs(ctx.party, k * span);
        for (size_t t = 0; t < k; t++)
            for (size_t i = 0; i < span; i++) {
                lhs.values[t * span + i] = u[t * width + i];
                rhs.values[t * span + i] = u[t * width + i + s];
            }
        const auto prod = mul_batch<1>(ctx, lhs, rhs);
        for (size_t t = 0; t < k; t++)
            for (size_t i = 0; i < span; i++) {
                const size_t at = t * width + i;
                u[at] = u[at] ^ u[at + s] ^ prod.values[t * span + i];
            }
    }

    // d marks the most significant differing bit (at most one per item).
    ShareVector<1> d(ctx.party, xs.size());
    for (size_t t = 0; t < k; t++) {
        for (size_t i = 0; i + 1 < width; i++)
            d.values[t * width + i] = u[t * width + i] ^ u[t * width + i + 1];
        d.values[t * width + width - 1] = u[t * width + width - 1];
    }
    const auto dx = mul_batch<1>(ctx, d, xs);

    const uint64_t one = ctx.party == Party::alice ? 1 : 0;
    ShareVector<1> c(ctx.party, k);
    for (size_t t = 0; t < k; t++) {
        uint64_t acc = one ^ u[t * width];  // 1 XOR u_1; u_1 == 0 means x == y
        for (size_t i = 0; i < width; i++) acc ^= dx.values[t * width + i];
        c.values[t] = acc;
    }
    return c;
}

inline BitShare secure_compare_geq(ProtocolContext& ctx, const BitVectorShare& x,
                                   const BitVectorShare& y) {
    if (x.size() != y.size()) throw usage_error("secure_compare_geq: length mismatch");
    if (x.size() == 0) throw usage_error("secure_compare_geq: empty bit strings");
    return compare_geq_batch(ctx, x, y, x.size()).share(0);
}

// --- bit decomposition ----------------------------------------------------------

// Z_{2^64} -> Z_2 conversion for a batch of values: each party bit-decomposes
// its own additive share locally, both bit vectors are re-shared over Z_2,
// and a shared ripple-carry adder reconstitutes the low `nbits` bits of the
// sum. Truncating the carry chain commutes with mod-2^64 addition, so the
// output is exactly the low bits of x. Returns a flat k*nbits vector,
// LSB-first per value.
inline ShareVector<1> bit_decompose_batch(ProtocolContext& ctx, const ShareVector<64>& xs,
                                          int nbits) {
    detail::require_mine(ctx, xs, "bit_decompose_batch");
    if (nbits < 1 || nbits > 64) throw usage_error("bit_decompose_batch: nbits out of range");
    const size_t k = xs.size();
    const size_t total = k * size_t(nbits);

    std::vector<uint64_t> my_bits(total);
    for (size_t t = 0; t < k; t++)
        for (int j = 0; j < nbits; j++)
            my_bits[t * nbits + j] = (xs.values[t] >> j) & 1;

    auto [a, b] = share_inputs_bidir<1>(ctx, my_bits, total, total);

    // p = a XOR b; s_j = p_j XOR carry_j.
    std::vector<uint64_t> p(total);
    for (size_t i = 0; i < total; i++) p[i] = a.values[i] ^ b.values[i];
    if (nbits == 1) return ShareVector<1>(ctx.party, std::move(p));

    // Generate bits g_j = a_j AND b_j for j <= nbits-2, batched in one round.
    ShareVector<1> ga(ctx.party, k * size_t(nbits - 1)), gb(ctx.party, k * size_t(nbits - 1));
    for (size_t t = 0; t < k; t++)
        for (int j = 0; j + 1 < nbits; j++) {
            ga.values[t * (nbits - 1) + j] = a.values[t * nbits + j];
            gb.values[t * (nbits - 1) + j] = b.values[t * nbits + j];
        }
    const auto g = mul_batch<1>(ctx, ga, gb);

    std::vector<uint64_t> out(total);
    std::vector<uint64_t> carry(k);
    for (size_t t = 0; t < k; t++) {
        out[t * nbits] = p[t * nbits];
        carry[t] = g.values[t * (nbits - 1)];  // carry into bit 1
        out[t * nbits + 1] = p[t * nbits + 1] ^ carry[t];
    }
    // carry_{j} = g_{j-1} XOR carry_{j-1} AND p_{j-1}, one round per bit.
    for (int j = 2; j < nbits; j++) {
        ShareVector<1> cv(ctx.party, k), pv(ctx.party, k);
        for (size_t t = 0; t < k; t++) {
            cv.values[t] = carry[t];
            pv.values[t] = p[t * nbits + j - 1];
        }
        const auto cp = mul_batch<1>(ctx, cv, pv);
        for (size_t t = 0; t < k; t++) {
            carry[t] = g.values[t * (nbits - 1) + j - 1] ^ cp.values[t];
            out[t * nbits + j] = p[t * nbits + j] ^ carry[t];
        }
    }
    return ShareVector<1>(ctx.party, std::move(out));
}

inline BitVectorShare secure_bit_decompose(ProtocolContext& ctx, const WordShare& x, int nbits) {
    if (x.party != ctx.party) throw usage_error("secure_bit_decompose: foreign share");
    ShareVector<64> xv(ctx.party, {x.value});
    return bit_decompose_batch(ctx, xv, nbits);
}

// --- Z_2 -> Z_q conversion -------------------------------------------------------

// Each party lifts its own Z_2 share bit into Z_{2^64} via masked sharing,
// then z = x_A + x_B - 2*x_A*x_B. Two rounds, one Z_q triple and one Z_q
// mask per party per element.
inline ShareVector<64> convert_2_to_q(ProtocolContext& ctx, const ShareVector<1>& bits) {
    detail::require_mine(ctx, bits, "convert_2_to_q");
    const size_t k = bits.size();
    auto [xa, xb] = share_inputs_bidir<64>(ctx, bits.values, k, k);
    const auto y = mul_batch<64>(ctx, xa, xb);
    ShareVector<64> z(ctx.party, k);
    for (size_t i = 0; i < k; i++)
        z.values[i] = xa.values[i] + xb.values[i] - 2 * y.values[i];  // wraps mod 2^64
    return z;
}

inline WordShare convert_2_to_q_one(ProtocolContext& ctx, const BitShare& bit) {
    if (bit.party != ctx.party) throw usage_error("convert_2_to_q_one: foreign share");
    ShareVector<1> v(ctx.party, {bit.value});
    return convert_2_to_q(ctx, v).share(0);
}

}  // namespace mpctext
