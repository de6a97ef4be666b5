#pragma once

// Socket mode for the trusted initializer: parties fetch their bundle over a
// short-lived connection that is torn down before the online phase starts,
// so the dealer cannot be part of any later exchange. File mode
// (persist_bundle/load_bundle) is the default distribution path.

#include "mpctext/dealer.hpp"
#include "mpctext/transport.hpp"

namespace mpctext {

inline constexpr char kBundleRequestMagic[8] = {'T', 'I', 'B', 'R', 'E', 'Q', '0', '1'};

// Serves each party its half of one dealing, then returns. A party may
// reconnect and fetch again (e.g. after a crash before the online phase);
// the loop ends once both have fetched at least once.
inline void serve_bundles(TcpListener& listener, const RandomnessBundle& alice,
                          const RandomnessBundle& bob, Millis timeout = kDefaultTimeout) {
    if (alice.party != Party::alice || bob.party != Party::bob)
        throw usage_error("serve_bundles: bundles passed in the wrong order");
    bool sent[2] = {false, false};
    while (!sent[0] || !sent[1]) {
        auto ch = listener.accept(timeout);
        std::array<uint8_t, 9> req{};
        ch->recv(req.data(), req.size());
        if (!std::equal(std::begin(kBundleRequestMagic), std::end(kBundleRequestMagic),
                        req.begin()) ||
            req[8] > 1)
            throw format_error("dealer: malformed bundle request");
        const Party who = Party(req[8]);
        const auto bytes = encode_bundle(who == Party::alice ? alice : bob);
        std::vector<uint8_t> reply;
        put_u32_le(reply, uint32_t(bytes.size()));
        reply.insert(reply.end(), bytes.begin(), bytes.end());
        ch->send(reply);
        sent[int(who)] = true;
    }
}

inline RandomnessBundle fetch_bundle(const std::string& host, uint16_t port, Party party,
                                     Millis timeout = kDefaultTimeout) {
    const auto ch = tcp_connect(host, port, timeout);
    std::vector<uint8_t> req(std::begin(kBundleRequestMagic), std::end(kBundleRequestMagic));
    req.push_back(uint8_t(party));
    ch->send(req);

    std::array<uint8_t, 4> len_bytes{};
    ch->recv(len_bytes.data(), len_bytes.size());
    const uint32_t len = get_u32_le(len_bytes, 0);
    if (len > (uint32_t(1) << 30)) throw format_error("dealer: oversized bundle reply");
    std::vector<uint8_t> bytes(len);
    if (len) ch->recv(bytes.data(), len);

    RandomnessBundle bundle = decode_bundle(bytes);
    if (bundle.party != party) throw format_error("dealer: received the other party's bundle");
    return bundle;
    // `ch` closes here: no dealer connection survives into the online phase.
}

}  // namespace mpctext
