#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mpctext/errors.hpp"
#include "mpctext/ring.hpp"
#include "mpctext/rng.hpp"

namespace mpctext {

enum class ModelKind : uint8_t { lr = 0, ada = 1 };

struct BucketSpec {
    uint32_t t = 0;   // 2^t buckets
    uint32_t s1 = 0;  // Bob bucket capacity
    uint32_t s2 = 0;  // Alice bucket capacity

    bool operator==(const BucketSpec&) const = default;
};

// Public shape of one classification session. Everything the dealer needs to
// size the correlated-randomness pools, and everything both parties must
// agree on before going online.
struct DemandProfile {
    uint32_t n = 0;  // Bob lexicon size
    uint32_t m = 0;  // Alice token budget (post-padding when tagged)
    int l = 13;      // token bit-length
    int lambda = 64; // arithmetic ring exponent
    ModelKind kind = ModelKind::lr;
    // Dummy-tag embedding: items carry a 2-bit origin tag above the id so
    // padding/bucket dummies can never collide with real tokens. Forced on
    // when bucketized.
    bool tagged = true;
    std::optional<BucketSpec> buckets;

    bool operator==(const DemandProfile&) const = default;

    void validate() const {
        if (n == 0 || m == 0) throw config_error("DemandProfile: n and m must be positive");
        if (l < 1 || l > 30) throw config_error("DemandProfile: l out of range [1,30]");
        if (lambda != 64) throw config_error("DemandProfile: only lambda=64 is supported");
        if (buckets) {
            if (!tagged) throw config_error("DemandProfile: bucketized sessions require tagged items");
            if (buckets->s1 == 0 || buckets->s2 == 0)
                throw config_error("DemandProfile: bucket capacities must be positive");
            if (int(buckets->t) > l)
                throw config_error("DemandProfile: bucket-index bits exceed token bits");
            const uint64_t p = uint64_t(1) << buckets->t;
            if (p * buckets->s1 < n || p * buckets->s2 < m)
                throw config_error("DemandProfile: bucket capacity below set size");
        }
    }

    int ebits() const { return l + (tagged ? 2 : 0); }
    uint32_t bucket_count() const { return buckets ? uint32_t(1) << buckets->t : 1; }
    // Length of the (possibly expanded) feature vector.
    uint32_t feature_len() const { return buckets ? bucket_count() * buckets->s1 : n; }
    uint32_t alice_items() const { return buckets ? bucket_count() * buckets->s2 : m; }
    uint32_t bob_items() const { return feature_len(); }
};

// --- circuit-size arithmetic -------------------------------------------------

inline int ceil_log2(uint64_t x) {
    int k = 0;
    while ((uint64_t(1) << k) < x) k++;
    return k;
}

inline uint64_t equality_triples(int ell) { return uint64_t(ell) - 1; }

inline uint64_t prefix_or_triples(int ell) {
    uint64_t total = 0;
    for (uint64_t s = 1; s < uint64_t(ell); s <<= 1) total += uint64_t(ell) - s;
    return total;
}

inline uint64_t compare_triples(int ell) { return prefix_or_triples(ell) + uint64_t(ell); }

// Ripple-carry adder: ell-1 generate ANDs plus ell-2 carry-chain ANDs.
inline uint64_t decompose_triples(int ell) {
    return ell >= 2 ? uint64_t(2 * ell - 3) : 0;
}

inline uint64_t equality_rounds(int ell) { return uint64_t(ceil_log2(uint64_t(ell))); }
inline uint64_t compare_rounds(int ell) { return equality_rounds(ell) + 1; }
inline uint64_t decompose_rounds(int ell) { return ell >= 2 ? uint64_t(ell) : 1; }

// Exact per-session correlated-randomness consumption, broken down by
// protocol stage. Totals are what the dealer provisions; the breakdown is
// what the per-op accounting asserts against.
struct Demand {
    uint64_t fe_eq_tests = 0;
    uint64_t fe_z2_triples = 0;
    uint64_t fe_z2_masks_alice = 0;
    uint64_t fe_z2_masks_bob = 0;

    uint64_t conv_zq_triples = 0;
    uint64_t conv_zq_masks_alice = 0;
    uint64_t conv_zq_masks_bob = 0;

    uint64_t score_zq_masks_bob = 0;  // model sharing (w,b or y,z)
    uint64_t ip_zq_triples = 0;
    uint64_t decomp_z2_triples = 0;
    uint64_t decomp_z2_masks_alice = 0;
    uint64_t decomp_z2_masks_bob = 0;
    uint64_t cmp_z2_triples = 0;  // AdaBoost final comparison only

    uint64_t z2_triples() const { return fe_z2_triples + decomp_z2_triples + cmp_z2_triples; }
    uint64_t zq_triples() const { return conv_zq_triples + ip_zq_triples; }
    uint64_t z2_masks(Party p) const {
        return (p == Party::alice ? fe_z2_masks_alice : fe_z2_masks_bob) +
               (p == Party::alice ? decomp_z2_masks_alice : decomp_z2_masks_bob);
    }
    uint64_t zq_masks(Party p) const {
        return (p == Party::alice ? conv_zq_masks_alice
                                  : conv_zq_masks_bob + score_zq_masks_bob);
    }
};

inline Demand count_demand(const DemandProfile& pr) {
    pr.validate();
    Demand d;
    const int ebits = pr.ebits();

    if (pr.buckets) {
        const uint64_t p = pr.bucket_count();
        d.fe_eq_tests = p * pr.buckets->s1 * pr.buckets->s2;
    } else {
        d.fe_eq_tests = uint64_t(pr.n) * pr.m;
    }
    d.fe_z2_triples = d.fe_eq_tests * equality_triples(ebits);
    d.fe_z2_masks_alice = uint64_t(pr.alice_items()) * ebits;
    d.fe_z2_masks_bob = uint64_t(pr.bob_items()) * ebits;

    const uint64_t k = pr.feature_len();
    d.conv_zq_triples = k;
    d.conv_zq_masks_alice = k;
    d.conv_zq_masks_bob = k;

    const int scoreboard_bits = 64;
    if (pr.kind == ModelKind::lr) {
        d.score_zq_masks_bob = k + 1;  // weights + intercept
        d.ip_zq_triples = k;
        d.decomp_z2_triples = decompose_triples(scoreboard_bits);
        d.decomp_z2_masks_alice = scoreboard_bits;
        d.decomp_z2_masks_bob = scoreboard_bits;
    } else {
        d.score_zq_masks_bob = 4 * k;  // y and z, 2k each
        d.ip_zq_triples = 4 * k;       // two inner products of length 2k
        d.decomp_z2_triples = 2 * decompose_triples(scoreboard_bits);
        d.decomp_z2_masks_alice = 2 * scoreboard_bits;
        d.decomp_z2_masks_bob = 2 * scoreboard_bits;
        d.cmp_z2_triples = compare_triples(scoreboard_bits);
    }
    return d;
}

// Analytic online round counts, matched against transport counters in tests.
inline uint64_t fe_rounds(const DemandProfile& pr) {
    return 1 + equality_rounds(pr.ebits());  // input sharing + equality tree
}
inline uint64_t conversion_rounds() { return 2; }  // input sharing + multiply
inline uint64_t scoring_rounds(ModelKind kind, bool opened) {
    // model sharing + inner product(s) + decomposition (+ comparison) + opening
    uint64_t r = 1 + 1 + decompose_rounds(64) + (opened ? 1 : 0);
    if (kind == ModelKind::ada) r += compare_rounds(64);
    return r;
}
inline uint64_t session_rounds(const DemandProfile& pr, bool opened) {
    return fe_rounds(pr) + conversion_rounds() + scoring_rounds(pr.kind, opened);
}

// --- dealing -----------------------------------------------------------------

// One party's additive shares of a pool of multiplication triples
// (c = a*b in the pool's ring).
struct TriplePool {
    std::vector<uint64_t> a, b, c;

    size_t size() const { return a.size(); }

    bool operator==(const TriplePool&) const = default;
};

// Everything the trusted initializer hands one party before the online
// phase: triple shares in both rings plus input masks for this party's own
// inputs. Pool sizes are exactly count_demand(profile).
struct RandomnessBundle {
    Party party = Party::alice;
    DemandProfile profile;
    TriplePool z2, zq;
    std::vector<uint64_t> masks_z2, masks_zq;

    bool operator==(const RandomnessBundle&) const = default;
};

inline std::pair<RandomnessBundle, RandomnessBundle> deal_from_demand(
    const DemandProfile& profile, const Demand& demand, Rng& rng) {
    RandomnessBundle alice{Party::alice, profile, {}, {}, {}, {}};
    RandomnessBundle bob{Party::bob, profile, {}, {}, {}, {}};

    auto deal_triples = [&](auto ring, TriplePool& pa, TriplePool& pb, uint64_t count) {
        using R = decltype(ring);
        pa.a.reserve(count), pa.b.reserve(count), pa.c.reserve(count);
        pb.a.reserve(count), pb.b.reserve(count), pb.c.reserve(count);
        for (uint64_t i = 0; i < count; i++) {
            const uint64_t a = R::reduce(rng.word());
            const uint64_t b = R::reduce(rng.word());
            const uint64_t c = R::reduce(a * b);
            const uint64_t aa = R::reduce(rng.word());
            const uint64_t ba = R::reduce(rng.word());
            const uint64_t ca = R::reduce(rng.word());
            pa.a.push_back(aa), pa.b.push_back(ba), pa.c.push_back(ca);
            pb.a.push_back(R::reduce(a - aa));
            pb.b.push_back(R::reduce(b - ba));
            pb.c.push_back(R::reduce(c - ca));
        }
    };
    deal_triples(Z2{}, alice.z2, bob.z2, demand.z2_triples());
    deal_triples(Zq{}, alice.zq, bob.zq, demand.zq_triples());

    auto deal_masks = [&](auto ring, std::vector<uint64_t>& pool, uint64_t count) {
        using R = decltype(ring);
        pool.reserve(count);
        for (uint64_t i = 0; i < count; i++) pool.push_back(R::reduce(rng.word()));
    };
    deal_masks(Z2{}, alice.masks_z2, demand.z2_masks(Party::alice));
    deal_masks(Z2{}, bob.masks_z2, demand.z2_masks(Party::bob));
    deal_masks(Zq{}, alice.masks_zq, demand.zq_masks(Party::alice));
    deal_masks(Zq{}, bob.masks_zq, demand.zq_masks(Party::bob));

    return {std::move(alice), std::move(bob)};
}

// With a seed the output is deterministic (test/reproduction mode, insecure);
// without one a CSPRNG is used.
inline std::pair<RandomnessBundle, RandomnessBundle> deal(
    const DemandProfile& profile, const std::optional<std::array<uint8_t, 32>>& seed = {}) {
    const Demand demand = count_demand(profile);
    auto rng = make_rng(seed);
    return deal_from_demand(profile, demand, *rng);
}

// --- bundle files ------------------------------------------------------------
// Layout: magic "TIBNDL01", 1-byte party id, the demand profile, then four
// pools, each a 4-byte little-endian count followed by packed share bytes
// (Z_2 packed 8 per byte LSB-first, Z_{2^64} 8-byte little-endian words).
// Pool order: Z_2 triples (a|b|c bit arrays), Z_q triples (a,b,c per
// triple), Z_2 masks, Z_q masks.

inline constexpr char kBundleMagic[8] = {'T', 'I', 'B', 'N', 'D', 'L', '0', '1'};

namespace detail {

inline void pack_bits(std::vector<uint8_t>& out, std::span<const uint64_t> bits) {
    size_t base = out.size();
    out.resize(base + (bits.size() + 7) / 8, 0);
    for (size_t i = 0; i < bits.size(); i++)
        if (bits[i] & 1) out[base + i / 8] |= uint8_t(1u << (i % 8));
}

inline std::vector<uint64_t> unpack_bits(std::span<const uint8_t> in, size_t count) {
    std::vector<uint64_t> bits(count);
    for (size_t i = 0; i < count; i++) bits[i] = (in[i / 8] >> (i % 8)) & 1;
    return bits;
}

inline void encode_profile(std::vector<uint8_t>& out, const DemandProfile& pr) {
    put_u32_le(out, pr.n);
    put_u32_le(out, pr.m);
    out.push_back(uint8_t(pr.l));
    out.push_back(uint8_t(pr.lambda));
    out.push_back(uint8_t(pr.kind));
    out.push_back(pr.tagged ? 1 : 0);
    out.push_back(pr.buckets ? 1 : 0);
    const BucketSpec bs = pr.buckets.value_or(BucketSpec{});
    put_u32_le(out, bs.t);
    put_u32_le(out, bs.s1);
    put_u32_le(out, bs.s2);
}

inline constexpr size_t kProfileBytes = 4 + 4 + 5 + 12;

inline DemandProfile decode_profile(std::span<const uint8_t> in) {
    if (in.size() < kProfileBytes) throw format_error("bundle: truncated profile block");
    DemandProfile pr;
    pr.n = get_u32_le(in, 0);
    pr.m = get_u32_le(in, 4);
    pr.l = in[8];
    pr.lambda = in[9];
    if (in[10] > 1) throw format_error("bundle: bad model kind");
    pr.kind = ModelKind(in[10]);
    pr.tagged = in[11] != 0;
    if (in[12] > 1) throw format_error("bundle: bad bucket flag");
    if (in[12]) pr.buckets = BucketSpec{get_u32_le(in, 13), get_u32_le(in, 17), get_u32_le(in, 21)};
    return pr;
}

}  // namespace detail

inline std::vector<uint8_t> encode_bundle(const RandomnessBundle& b) {
    std::vector<uint8_t> out;
    out.insert(out.end(), std::begin(kBundleMagic), std::end(kBundleMagic));
    out.push_back(uint8_t(b.party));
    detail::encode_profile(out, b.profile);

    put_u32_le(out, uint32_t(b.z2.size()));
    detail::pack_bits(out, b.z2.a);
    detail::pack_bits(out, b.z2.b);
    detail::pack_bits(out, b.z2.c);

    put_u32_le(out, uint32_t(b.zq.size()));
    for (size_t i = 0; i < b.zq.size(); i++) {
        put_u64_le(out, b.zq.a[i]);
        put_u64_le(out, b.zq.b[i]);
        put_u64_le(out, b.zq.c[i]);
    }

    put_u32_le(out, uint32_t(b.masks_z2.size()));
    detail::pack_bits(out, b.masks_z2);

    put_u32_le(out, uint32_t(b.masks_zq.size()));
    for (uint64_t v : b.masks_zq) put_u64_le(out, v);
    return out;
}

inline RandomnessBundle decode_bundle(std::span<const uint8_t> in) {
    size_t off = 0;
    auto need = [&](size_t k) {
        if (in.size() - off < k) throw format_error("bundle: truncated file");
    };
    need(sizeof(kBundleMagic));
    if (!std::equal(std::begin(kBundleMagic), std::end(kBundleMagic), in.begin()))
        throw format_error("bundle: bad magic or unsupported version");
    off += sizeof(kBundleMagic);

    need(1);
    if (in[off] > 1) throw format_error("bundle: bad party id");
    RandomnessBundle b;
    b.party = Party(in[off]);
    off += 1;

    need(detail::kProfileBytes);
    b.profile = detail::decode_profile(in.subspan(off));
    off += detail::kProfileBytes;

    auto read_count = [&]() {
        need(4);
        uint32_t c = get_u32_le(in, off);
        off += 4;
        return c;
    };
    auto read_bits = [&](size_t count) {
        const size_t bytes = (count + 7) / 8;
        need(bytes);
        auto bits = detail::unpack_bits(in.subspan(off, bytes), count);
        off += bytes;
        return bits;
    };
    auto read_words = [&](size_t count) {
        need(count * 8);
        std::vector<uint64_t> w(count);
        for (size_t i = 0; i < count; i++) w[i] = get_u64_le(in, off + i * 8);
        off += count * 8;
        return w;
    };

    const uint32_t n2 = read_count();
    b.z2.a = read_bits(n2);
    b.z2.b = read_bits(n2);
    b.z2.c = read_bits(n2);

    const uint32_t nq = read_count();
    need(uint64_t(nq) * 24);  // before allocating anything count-sized
    b.zq.a.resize(nq), b.zq.b.resize(nq), b.zq.c.resize(nq);
    for (uint32_t i = 0; i < nq; i++) {
        b.zq.a[i] = get_u64_le(in, off);
        b.zq.b[i] = get_u64_le(in, off + 8);
        b.zq.c[i] = get_u64_le(in, off + 16);
        off += 24;
    }

    b.masks_z2 = read_bits(read_count());
    b.masks_zq = read_words(read_count());

    if (off != in.size()) throw format_error("bundle: trailing bytes");
    return b;
}

inline void persist_bundle(const RandomnessBundle& b, const std::filesystem::path& path) {
    const auto bytes = encode_bundle(b);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw format_error("bundle: cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!out) throw format_error("bundle: write failed for " + path.string());
}

inline RandomnessBundle load_bundle(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw format_error("bundle: cannot open " + path.string());
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    return decode_bundle(bytes);
}

// Sequential consumption cursors over one party's bundle. A session owns its
// view exclusively; drawing past a pool throws. This is also where mask
// single-use is enforced: a mask leaves the pool exactly once.
class BundleView {
public:
    explicit BundleView(const RandomnessBundle& b) : b_(&b) {}

    struct Triple {
        uint64_t a, b, c;
    };

    struct Consumed {
        uint64_t z2_triples = 0, zq_triples = 0, z2_masks = 0, zq_masks = 0;

        bool operator==(const Consumed&) const = default;
    };

    template <int Bits>
    Triple draw_triple() {
        static_assert(Bits == 1 || Bits == 64);
        const TriplePool& pool = (Bits == 1) ? b_->z2 : b_->zq;
        uint64_t& cur = (Bits == 1) ? used_.z2_triples : used_.zq_triples;
        if (cur >= pool.size())
            throw randomness_error(std::string("triple pool exhausted (") +
                                   (Bits == 1 ? "Z_2" : "Z_q") + ")");
        Triple t{pool.a[cur], pool.b[cur], pool.c[cur]};
        cur++;
        return t;
    }

    template <int Bits>
    uint64_t draw_mask() {
        const std::vector<uint64_t>& pool = (Bits == 1) ? b_->masks_z2 : b_->masks_zq;
        uint64_t& cur = (Bits == 1) ? used_.z2_masks : used_.zq_masks;
        if (cur >= pool.size())
            throw randomness_error(std::string("mask pool exhausted (") +
                                   (Bits == 1 ? "Z_2" : "Z_q") + ")");
        return pool[cur++];
    }

    const Consumed& consumed() const { return used_; }
    const RandomnessBundle& bundle() const { return *b_; }

    bool fully_drained() const {
        return used_.z2_triples == b_->z2.size() && used_.zq_triples == b_->zq.size() &&
               used_.z2_masks == b_->masks_z2.size() && used_.zq_masks == b_->masks_zq.size();
    }

private:
    const RandomnessBundle* b_;
    Consumed used_;
};

}  // namespace mpctext
