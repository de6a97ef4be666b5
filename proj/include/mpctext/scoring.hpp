#pragma once

#include <optional>
#include <span>

#include "mpctext/model.hpp"
#include "mpctext/protocol.hpp"

namespace mpctext {

struct ScoreResult {
    std::optional<int> label;  // set iff the policy discloses to this party
    BitShare label_share;      // always valid; the keep-shared output
};

namespace detail {

inline ScoreResult open_label(ProtocolContext& ctx, const BitShare& c, DisclosurePolicy policy) {
    ScoreResult res;
    res.label_share = c;
    if (policy == DisclosurePolicy::keep_shared) return res;
    ShareVector<1> v(ctx.party, {c.value});
    if (auto opened = open_batch<1>(ctx, v, policy)) res.label = int((*opened)[0]);
    return res;
}

}  // namespace detail

// LR scoring over an already-shared binary feature vector (as Z_q
// shares): Bob
// masks-in his weight vector and intercept, score = <x,w> + b, and the sign
// is the complement of the score's two's-complement MSB, extracted via
// bit decomposition. Threshold 0.5 on the sigmoid == score >= 0, ties to 1.
// Alice passes empty weight spans.
inline ScoreResult secure_lr_classify(ProtocolContext& ctx, const ShareVector<64>& x,
                                      std::span<const uint64_t> w_raw, uint64_t b_raw,
                                      DisclosurePolicy policy) {
    const size_t k = x.size();
    std::vector<uint64_t> wb;
    if (ctx.party == Party::bob) {
        if (w_raw.size() != k)
            throw usage_error("secure_lr_classify: weight vector does not match feature length");
        wb.assign(w_raw.begin(), w_raw.end());
        wb.push_back(b_raw);
    }
    const auto shared = share_from<64>(ctx, Party::bob, wb, k + 1);

    ShareVector<64> w(ctx.party, std::vector<uint64_t>(shared.values.begin(),
                                                       shared.values.begin() + k));
    const WordShare b = shared.share(k);
    const WordShare score = local_add(secure_inner_product(ctx, x, w), b);

    const auto bits = bit_decompose_batch(ctx, ShareVector<64>(ctx.party, {score.value}), 64);
    const BitShare c = local_add_const<1>(1, bits.share(63));  // 1 - MSB
    return detail::open_label(ctx, c, policy);
}

// w = (1-x_1, x_1, ..., 1-x_n, x_n), computed locally on the shares.
inline ShareVector<64> expand_stump_features(const ShareVector<64>& x) {
    ShareVector<64> w(x.party, 2 * x.size());
    for (size_t i = 0; i < x.size(); i++) {
        w.values[2 * i] = local_sub_from_const<64>(1, x.share(i)).value;
        w.values[2 * i + 1] = x.values[i];
    }
    return w;
}

// AdaBoost scoring: Bob masks-in the flattened vote vectors y and z; both parties
// locally expand w = (1-x_1, x_1, ..., 1-x_n, x_n); two inner products
// (batched into one round) give the aggregated votes p0, p1; bit
// decomposition plus unsigned comparison yield class = [p1 >= p0] (so a tie
// votes 1). Vote vectors are non-negative by model invariant, which keeps
// p0, p1 below the sign bit and makes the unsigned comparison exact.
inline ScoreResult secure_adaboost_classify(ProtocolContext& ctx, const ShareVector<64>& x,
                                            std::span<const uint64_t> y_raw,
                                            std::span<const uint64_t> z_raw,
                                            DisclosurePolicy policy) {
    const size_t k = x.size();
    std::vector<uint64_t> yz;
    if (ctx.party == Party::bob) {
        if (y_raw.size() != 2 * k || z_raw.size() != 2 * k)
            throw usage_error("secure_adaboost_classify: vote vectors must have length 2n");
        yz.assign(y_raw.begin(), y_raw.end());
        yz.insert(yz.end(), z_raw.begin(), z_raw.end());
    }
    const auto shared = share_from<64>(ctx, Party::bob, yz, 4 * k);

    const ShareVector<64> w = expand_stump_features(x);

    // <y,w> and <z,w> share one Beaver round.
    ShareVector<64> lhs(ctx.party, 4 * k), rhs(ctx.party, 4 * k);
    for (size_t i = 0; i < 4 * k; i++) {
        lhs.values[i] = shared.values[i];
        rhs.values[i] = w.values[i % (2 * k)];
    }
    const auto prods = mul_batch<64>(ctx, lhs, rhs);
    uint64_t p0 = 0, p1 = 0;
    for (size_t i = 0; i < 2 * k; i++) {
        p0 += prods.values[i];
        p1 += prods.values[2 * k + i];
    }

    const auto bits =
        bit_decompose_batch(ctx, ShareVector<64>(ctx.party, {p0, p1}), 64);
    ShareVector<1> p0_bits(ctx.party, std::vector<uint64_t>(bits.values.begin(),
                                                            bits.values.begin() + 64));
    ShareVector<1> p1_bits(ctx.party, std::vector<uint64_t>(bits.values.begin() + 64,
                                                            bits.values.end()));
    const BitShare c = secure_compare_geq(ctx, p1_bits, p0_bits);
    return detail::open_label(ctx, c, policy);
}

}  // namespace mpctext
