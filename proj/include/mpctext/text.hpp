#pragma once

#include <algorithm>
#include <cctype>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mpctext/dealer.hpp"
#include "mpctext/hash.hpp"
#include "mpctext/protocol.hpp"

namespace mpctext {

// Lowercase (ASCII) the text and split it into word unigrams plus adjacent
// bigrams joined by a single space. Splitting is on ASCII whitespace; no
// other normalization. May contain duplicates; deduplication happens after
// hashing.
inline std::vector<std::string> tokenize(std::string_view text) {
    std::string lowered(text);
    for (char& c : lowered)
        if (c >= 'A' && c <= 'Z') c = char(c - 'A' + 'a');

    std::vector<std::string> words;
    size_t i = 0;
    while (i < lowered.size()) {
        while (i < lowered.size() && std::isspace(uint8_t(lowered[i]))) i++;
        size_t j = i;
        while (j < lowered.size() && !std::isspace(uint8_t(lowered[j]))) j++;
        if (j > i) words.emplace_back(lowered.substr(i, j - i));
        i = j;
    }

    std::vector<std::string> grams = words;
    for (size_t k = 0; k + 1 < words.size(); k++)
        grams.push_back(words[k] + " " + words[k + 1]);
    return grams;
}

// Deduplicated l-bit token ids for one party's text, kept sorted so
// protocol-visible structure is independent of word order.
struct TokenSet {
    std::vector<uint32_t> ids;
    int l = 13;

    size_t size() const { return ids.size(); }
};

inline TokenSet build_token_set(std::string_view text, const HashParams& hp) {
    std::set<uint32_t> uniq;
    for (const auto& gram : tokenize(text)) uniq.insert(hash_token(gram, hp));
    return {{uniq.begin(), uniq.end()}, hp.l};
}

// Bob's ordered feature ids. Order matches the model's feature order; a
// collision between two distinct features would silently merge their
// weights, so it is a configuration error.
struct Lexicon {
    std::vector<uint32_t> ids;
    int l = 13;

    size_t size() const { return ids.size(); }
};

inline Lexicon build_lexicon(const std::vector<std::string>& features, const HashParams& hp) {
    Lexicon lex{{}, hp.l};
    lex.ids.reserve(features.size());
    std::set<uint32_t> seen;
    for (size_t i = 0; i < features.size(); i++) {
        const uint32_t id = hash_token(features[i], hp);
        if (!seen.insert(id).second)
            throw config_error("lexicon: hash collision at feature '" + features[i] +
                               "' (id " + std::to_string(id) +
                               "); increase --token-bits or drop the feature");
        lex.ids.push_back(id);
    }
    return lex;
}

// --- dummy-tag embedding -------------------------------------------------------
// With padding or bucketization in play, items are widened by a 2-bit origin
// tag above the id: 00|id for real tokens, 01|counter for Alice's dummies,
// 10|counter for Bob's. Dummies therefore cannot collide with anything real,
// on either side.

inline uint64_t embed_real(uint32_t id) { return id; }
inline uint64_t embed_alice_dummy(uint32_t counter, int l) {
    return (uint64_t(0b01) << l) | counter;
}
inline uint64_t embed_bob_dummy(uint32_t counter, int l) {
    return (uint64_t(0b10) << l) | counter;
}

// --- bucketization (optional fast path) -----------------------------------------

// Assigns l-bit ids to 2^t fixed-capacity buckets by the top t bits of a
// second Carter-Wegman hash with its own public constants, so the bucket
// index is not correlated with the id bits themselves.
struct BucketLayout {
    BucketSpec spec;
    uint64_t a2 = 48'271;
    uint64_t b2 = 16'127;
};

inline uint32_t bucket_of(uint32_t id, const BucketLayout& layout, const HashParams& hp) {
    const uint64_t h = ((layout.a2 * id + layout.b2) % hp.p) & ((uint64_t(1) << hp.l) - 1);
    return uint32_t(h >> (hp.l - layout.spec.t));
}

namespace detail {

inline void check_dummy_counter(uint64_t count, int l) {
    if (count >> l)
        throw config_error("bucketize: dummy counter exceeds the token id space");
}

}  // namespace detail

// Alice's side: distribute her token ids over the buckets and pad every
// bucket to exactly s2 items. Overflow aborts with the bucket named; the
// remedy is a larger s2.
inline std::vector<uint64_t> alice_items_bucketized(const TokenSet& tokens,
                                                    const BucketLayout& layout,
                                                    const HashParams& hp) {
    const uint32_t p = uint32_t(1) << layout.spec.t;
    const uint32_t s2 = layout.spec.s2;
    std::vector<std::vector<uint64_t>> buckets(p);
    for (uint32_t id : tokens.ids) {
        const uint32_t g = bucket_of(id, layout, hp);
        if (buckets[g].size() >= s2)
            throw config_error("bucketize: alice bucket " + std::to_string(g) +
                               " overflows capacity s2=" + std::to_string(s2));
        buckets[g].push_back(embed_real(id));
    }
    std::vector<uint64_t> items;
    items.reserve(size_t(p) * s2);
    uint32_t counter = 0;
    detail::check_dummy_counter(uint64_t(p) * s2, hp.l);
    for (uint32_t g = 0; g < p; g++) {
        for (uint64_t v : buckets[g]) items.push_back(v);
        for (size_t k = buckets[g].size(); k < s2; k++)
            items.push_back(embed_alice_dummy(counter++, hp.l));
    }
    return items;
}

// Bob's side additionally reports where each original feature landed in the
// expanded vector of length 2^t*s1; dummy positions get zero model weight.
struct BobPlacement {
    std::vector<uint64_t> items;
    std::vector<uint32_t> feature_pos;  // original feature index -> expanded position
    uint32_t expanded_len = 0;
};

inline BobPlacement bob_items_bucketized(const Lexicon& lex, const BucketLayout& layout,
                                         const HashParams& hp) {
    const uint32_t p = uint32_t(1) << layout.spec.t;
    const uint32_t s1 = layout.spec.s1;
    std::vector<std::vector<uint64_t>> buckets(p);
    std::vector<uint32_t> pos(lex.size());
    for (size_t i = 0; i < lex.ids.size(); i++) {
        const uint32_t g = bucket_of(lex.ids[i], layout, hp);
        if (buckets[g].size() >= s1)
            throw config_error("bucketize: bob bucket " + std::to_string(g) +
                               " overflows capacity s1=" + std::to_string(s1));
        pos[i] = g * s1 + uint32_t(buckets[g].size());
        buckets[g].push_back(embed_real(lex.ids[i]));
    }
    BobPlacement out;
    out.expanded_len = p * s1;
    out.feature_pos = std::move(pos);
    out.items.reserve(out.expanded_len);
    uint32_t counter = 0;
    detail::check_dummy_counter(uint64_t(p) * s1, hp.l);
    for (uint32_t g = 0; g < p; g++) {
        for (uint64_t v : buckets[g]) out.items.push_back(v);
        for (size_t k = buckets[g].size(); k < s1; k++)
            out.items.push_back(embed_bob_dummy(counter++, hp.l));
    }
    return out;
}

// Direct (bucket-free) item lists. With tagging, Alice pads her set to
// exactly m items; untagged sessions cannot pad and require an exact count.
inline std::vector<uint64_t> alice_items_direct(const TokenSet& tokens, uint32_t m, bool tagged,
                                                int l) {
    if (tokens.size() > m)
        throw config_error("message has " + std::to_string(tokens.size()) +
                           " distinct tokens, above the session budget m=" + std::to_string(m));
    if (!tagged && tokens.size() != m)
        throw config_error("untagged session: token count must equal m exactly (got " +
                           std::to_string(tokens.size()) + ", expected " + std::to_string(m) +
                           ")");
    std::vector<uint64_t> items(tokens.ids.begin(), tokens.ids.end());
    detail::check_dummy_counter(m - tokens.size(), l);
    for (uint32_t c = 0; items.size() < m; c++) items.push_back(embed_alice_dummy(c, l));
    return items;
}

inline BobPlacement bob_items_direct(const Lexicon& lex) {
    BobPlacement out;
    out.expanded_len = uint32_t(lex.size());
    out.items.assign(lex.ids.begin(), lex.ids.end());
    out.feature_pos.resize(lex.size());
    for (uint32_t i = 0; i < lex.size(); i++) out.feature_pos[i] = i;
    return out;
}

// Both halves at once, for tests and the plaintext oracle path.
struct Bucketized {
    std::vector<uint64_t> alice_items, bob_items;
    std::vector<uint32_t> feature_pos;
    uint32_t expanded_len = 0;
};

inline Bucketized bucketize(const TokenSet& tokens, const Lexicon& lex,
                            const BucketLayout& layout, const HashParams& hp) {
    if (layout.spec.t == 0 && layout.spec.s1 == 0)
        throw config_error("bucketize: empty layout");
    auto a = alice_items_bucketized(tokens, layout, hp);
    auto b = bob_items_bucketized(lex, layout, hp);
    return {std::move(a), std::move(b.items), std::move(b.feature_pos), b.expanded_len};
}

// --- secure feature extraction ---------------------------------------------------

// Public shape of one extraction: item counts, item bit-width, and the
// optional bucket structure restricting which pairs are compared.
struct FeSpec {
    uint32_t bob_count = 0;
    uint32_t alice_count = 0;
    int ebits = 0;
    std::optional<BucketSpec> buckets;

    static FeSpec from_profile(const DemandProfile& pr) {
        return {pr.bob_items(), pr.alice_items(), pr.ebits(), pr.buckets};
    }
};

// Private feature extraction: one equality test per (Bob item, Alice
// item) pair -- all pairs
// directly, or bucket-by-bucket when bucketized -- then x_i = XOR_j eq_ij
// locally. Requires Alice's items to be duplicate-free (two matches against
// the same Bob item would cancel mod 2). Output: Z_2 shares of the feature
// vector, length bob_count. One input-sharing round plus the equality tree.
inline ShareVector<1> secure_feature_extract(ProtocolContext& ctx, const FeSpec& spec,
                                             std::span<const uint64_t> my_items) {
    const size_t mine_expected = ctx.party == Party::alice ? spec.alice_count : spec.bob_count;
    if (my_items.size() != mine_expected)
        throw usage_error("secure_feature_extract: item count disagrees with the session spec");
    if (spec.ebits < 1 || spec.ebits > 32)
        throw usage_error("secure_feature_extract: bad item width");
    for (uint64_t v : my_items)
        if (v >> spec.ebits) throw usage_error("secure_feature_extract: item exceeds ebits");
    if (spec.buckets) {
        const uint64_t p = uint64_t(1) << spec.buckets->t;
        if (spec.bob_count != p * spec.buckets->s1 || spec.alice_count != p * spec.buckets->s2)
            throw usage_error("secure_feature_extract: counts disagree with bucket layout");
    }

    const int ebits = spec.ebits;
    std::vector<uint64_t> my_bits(my_items.size() * size_t(ebits));
    for (size_t i = 0; i < my_items.size(); i++)
        for (int j = 0; j < ebits; j++)
            my_bits[i * ebits + j] = (my_items[i] >> j) & 1;

    auto [a_bits, b_bits] = share_inputs_bidir<1>(
        ctx, my_bits, size_t(spec.alice_count) * ebits, size_t(spec.bob_count) * ebits);

    // Pair list, Bob-major. Bucketized runs compare only within a bucket.
    std::vector<std::pair<uint32_t, uint32_t>> pairs;
    if (spec.buckets) {
        const uint32_t p = uint32_t(1) << spec.buckets->t;
        const uint32_t s1 = spec.buckets->s1, s2 = spec.buckets->s2;
        pairs.reserve(size_t(p) * s1 * s2);
        for (uint32_t g = 0; g < p; g++)
            for (uint32_t i = 0; i < s1; i++)
                for (uint32_t j = 0; j < s2; j++)
                    pairs.emplace_back(g * s1 + i, g * s2 + j);
    } else {
        pairs.reserve(size_t(spec.bob_count) * spec.alice_count);
        for (uint32_t i = 0; i < spec.bob_count; i++)
            for (uint32_t j = 0; j < spec.alice_count; j++) pairs.emplace_back(i, j);
    }

    ShareVector<1> lhs(ctx.party, pairs.size() * size_t(ebits));
    ShareVector<1> rhs(ctx.party, pairs.size() * size_t(ebits));
    for (size_t q = 0; q < pairs.size(); q++)
        for (int j = 0; j < ebits; j++) {
            lhs.values[q * ebits + j] = b_bits.values[size_t(pairs[q].first) * ebits + j];
            rhs.values[q * ebits + j] = a_bits.values[size_t(pairs[q].second) * ebits + j];
        }
    const auto eq = equality_batch(ctx, lhs, rhs, size_t(ebits));

    ShareVector<1> x(ctx.party, spec.bob_count);
    for (size_t q = 0; q < pairs.size(); q++) x.values[pairs[q].first] ^= eq.values[q];
    return x;
}

}  // namespace mpctext
