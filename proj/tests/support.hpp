#pragma once

// Shared helpers for the two-party tests: in-process session runner over the
// in-memory duplex, demand-sized dealing, and share-splitting utilities.

#include <array>
#include <optional>
#include <random>
#include <thread>
#include <utility>

#include "mpctext/pipeline.hpp"
#include "mpctext/protocol.hpp"

namespace support {

using namespace mpctext;

inline std::array<uint8_t, 32> seed32(uint64_t seed) {
    std::array<uint8_t, 32> s{};
    for (int i = 0; i < 8; i++) s[i] = uint8_t(seed >> (8 * i));
    return s;
}

// Catch2 assertions are not thread-safe; protocol lambdas run on two
// threads, so in-protocol checks throw instead and surface at the join.
struct expectation_failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void expect(bool cond, const char* what) {
    if (!cond) throw expectation_failure(what);
}

// Deal pools for an explicit demand; used by protocol-level tests that are
// not tied to a full session profile.
inline std::pair<RandomnessBundle, RandomnessBundle> deal_demand(const Demand& d, uint64_t seed) {
    SeededRng rng(seed32(seed));
    DemandProfile pr;  // placeholder shape; protocol tests ignore it
    pr.n = 1, pr.m = 1;
    return deal_from_demand(pr, d, rng);
}

inline Demand demand_z2(uint64_t triples, uint64_t masks_each = 0) {
    Demand d;
    d.fe_z2_triples = triples;
    d.fe_z2_masks_alice = masks_each;
    d.fe_z2_masks_bob = masks_each;
    return d;
}

inline Demand demand_zq(uint64_t triples, uint64_t masks_each = 0) {
    Demand d;
    d.conv_zq_triples = triples;
    d.conv_zq_masks_alice = masks_each;
    d.conv_zq_masks_bob = masks_each;
    return d;
}

// Runs the same protocol function at both parties over an in-memory duplex
// (handshake already done); returns both results as (alice, bob).
template <class F>
auto run_protocol(const RandomnessBundle& ba, const RandomnessBundle& bb, F f) {
    using R = std::invoke_result_t<F, ProtocolContext&>;
    auto channels = make_memory_pair(Millis(120'000));
    auto& ca = channels.first;
    auto& cb = channels.second;
    const ConfigDigest digest{};

    std::optional<R> ra, rb;
    std::exception_ptr ea, eb;
    std::thread tb([&, chan = std::move(cb)]() mutable {
        try {
            Transport t(std::move(chan), Party::bob);
            t.handshake(digest);
            ProtocolContext ctx(t, bb);
            rb.emplace(f(ctx));
        } catch (...) {
            eb = std::current_exception();
        }
    });
    try {
        Transport t(std::move(ca), Party::alice);
        t.handshake(digest);
        ProtocolContext ctx(t, ba);
        ra.emplace(f(ctx));
    } catch (...) {
        ea = std::current_exception();
    }
    tb.join();
    if (ea) std::rethrow_exception(ea);
    if (eb) std::rethrow_exception(eb);
    return std::make_pair(std::move(*ra), std::move(*rb));
}

// Random additive split of x for the given ring.
template <int Bits>
inline std::pair<uint64_t, uint64_t> split_value(uint64_t x, std::mt19937_64& rng) {
    const uint64_t a = Ring<Bits>::reduce(rng());
    return {a, Ring<Bits>::reduce(x - a)};
}

// Appends random Z_2 shares of the low `width` bits of v (LSB first).
inline void split_bits(uint64_t v, int width, std::mt19937_64& rng, std::vector<uint64_t>& a_out,
                       std::vector<uint64_t>& b_out) {
    for (int j = 0; j < width; j++) {
        const uint64_t bit = (v >> j) & 1;
        const uint64_t a = rng() & 1;
        a_out.push_back(a);
        b_out.push_back(bit ^ a);
    }
}

}  // namespace support
