#pragma once

#include <algorithm>
#include <array>
#include <cerrno>
#include <chrono>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include "mpctext/errors.hpp"
#include "mpctext/ring.hpp"
#include "mpctext/rng.hpp"

namespace mpctext {

using Millis = std::chrono::milliseconds;
inline constexpr Millis kDefaultTimeout{30'000};

// Reliable, ordered, connection-like byte stream. Implementations must make
// a peer's disappearance observable (recv throws instead of blocking
// forever).
class Channel {
public:
    virtual ~Channel() = default;
    virtual void send(std::span<const uint8_t> data) = 0;
    virtual void recv(uint8_t* out, size_t len) = 0;  // exactly len bytes
};

// --- in-memory duplex --------------------------------------------------------

namespace detail {

struct ByteQueue {
    std::mutex mu;
    std::condition_variable cv;
    std::deque<std::vector<uint8_t>> chunks;
    size_t head = 0;
    bool closed = false;

    void push(std::span<const uint8_t> data) {
        std::lock_guard lock(mu);
        if (closed) throw transport_error("in-memory channel: send after close");
        chunks.emplace_back(data.begin(), data.end());
        cv.notify_all();
    }

    void close() {
        std::lock_guard lock(mu);
        closed = true;
        cv.notify_all();
    }

    void pop_exact(uint8_t* out, size_t len, Millis timeout) {
        std::unique_lock lock(mu);
        size_t got = 0;
        while (got < len) {
            if (chunks.empty()) {
                if (closed) throw transport_error("in-memory channel: peer closed");
                if (!cv.wait_for(lock, timeout, [&] { return !chunks.empty() || closed; }))
                    throw transport_error("in-memory channel: recv timeout");
                continue;
            }
            auto& front = chunks.front();
            const size_t take = std::min(len - got, front.size() - head);
            std::memcpy(out + got, front.data() + head, take);
            got += take;
            head += take;
            if (head == front.size()) {
                chunks.pop_front();
                head = 0;
            }
        }
    }
};

}  // namespace detail

class MemoryChannel final : public Channel {
public:
    MemoryChannel(std::shared_ptr<detail::ByteQueue> rx, std::shared_ptr<detail::ByteQueue> tx,
                  Millis timeout)
        : rx_(std::move(rx)), tx_(std::move(tx)), timeout_(timeout) {}

    ~MemoryChannel() override { tx_->close(); }

    void send(std::span<const uint8_t> data) override { tx_->push(data); }
    void recv(uint8_t* out, size_t len) override { rx_->pop_exact(out, len, timeout_); }

private:
    std::shared_ptr<detail::ByteQueue> rx_, tx_;
    Millis timeout_;
};

inline std::pair<std::unique_ptr<Channel>, std::unique_ptr<Channel>> make_memory_pair(
    Millis timeout = kDefaultTimeout) {
    auto q1 = std::make_shared<detail::ByteQueue>();
    auto q2 = std::make_shared<detail::ByteQueue>();
    return {std::make_unique<MemoryChannel>(q1, q2, timeout),
            std::make_unique<MemoryChannel>(q2, q1, timeout)};
}

// --- TCP ----------------------------------------------------------------------

class TcpChannel final : public Channel {
public:
    explicit TcpChannel(int fd, Millis timeout) : fd_(fd) {
        timeval tv{};
        tv.tv_sec = long(timeout.count() / 1000);
        tv.tv_usec = long(timeout.count() % 1000) * 1000;
        setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
        int one = 1;
        setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    }

    ~TcpChannel() override {
        if (fd_ >= 0) ::close(fd_);
    }

    TcpChannel(const TcpChannel&) = delete;
    TcpChannel& operator=(const TcpChannel&) = delete;

    void send(std::span<const uint8_t> data) override {
        size_t sent = 0;
        while (sent < data.size()) {
            const ssize_t k =
                ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
            if (k < 0) {
                if (errno == EINTR) continue;
                throw transport_error(std::string("tcp send: ") + std::strerror(errno));
            }
            sent += size_t(k);
        }
    }

    void recv(uint8_t* out, size_t len) override {
        size_t got = 0;
        while (got < len) {
            const ssize_t k = ::recv(fd_, out + got, len - got, 0);
            if (k == 0) throw transport_error("tcp recv: peer closed connection");
            if (k < 0) {
                if (errno == EINTR) continue;
                if (errno == EAGAIN || errno == EWOULDBLOCK)
                    throw transport_error("tcp recv: timeout");
                throw transport_error(std::string("tcp recv: ") + std::strerror(errno));
            }
            got += size_t(k);
        }
    }

private:
    int fd_;
};

class TcpListener {
public:
    TcpListener(const std::string& host, uint16_t port) {
        addrinfo hints{};
        hints.ai_family = AF_UNSPEC;
        hints.ai_socktype = SOCK_STREAM;
        hints.ai_flags = AI_PASSIVE;
        addrinfo* res = nullptr;
        const std::string portstr = std::to_string(port);
        if (getaddrinfo(host.empty() ? nullptr : host.c_str(), portstr.c_str(), &hints, &res) != 0)
            throw transport_error("tcp listen: cannot resolve " + host);
        int fd = -1;
        for (addrinfo* ai = res; ai; ai = ai->ai_next) {
            fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
            if (fd < 0) continue;
            int one = 1;
            setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
            if (::bind(fd, ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(fd, 8) == 0) break;
            ::close(fd);
            fd = -1;
        }
        freeaddrinfo(res);
        if (fd < 0) throw transport_error("tcp listen: cannot bind " + host + ":" + portstr);
        fd_ = fd;

        sockaddr_storage ss{};
        socklen_t slen = sizeof(ss);
        if (getsockname(fd_, reinterpret_cast<sockaddr*>(&ss), &slen) == 0) {
            if (ss.ss_family == AF_INET)
                port_ = ntohs(reinterpret_cast<sockaddr_in*>(&ss)->sin_port);
            else if (ss.ss_family == AF_INET6)
                port_ = ntohs(reinterpret_cast<sockaddr_in6*>(&ss)->sin6_port);
        }
    }

    ~TcpListener() {
        if (fd_ >= 0) ::close(fd_);
    }

    TcpListener(const TcpListener&) = delete;
    TcpListener& operator=(const TcpListener&) = delete;

    // Bound port; useful when constructed with port 0.
    uint16_t port() const { return port_; }

    std::unique_ptr<Channel> accept(Millis timeout = kDefaultTimeout) {
        timeval tv{};
        tv.tv_sec = long(timeout.count() / 1000);
        tv.tv_usec = long(timeout.count() % 1000) * 1000;
        setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
        const int cfd = ::accept(fd_, nullptr, nullptr);
        if (cfd < 0) throw transport_error(std::string("tcp accept: ") + std::strerror(errno));
        return std::make_unique<TcpChannel>(cfd, timeout);
    }

private:
    int fd_ = -1;
    uint16_t port_ = 0;
};

inline std::unique_ptr<Channel> tcp_connect(const std::string& host, uint16_t port,
                                            Millis timeout = kDefaultTimeout) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    const std::string portstr = std::to_string(port);
    while (true) {
        addrinfo hints{};
        hints.ai_family = AF_UNSPEC;
        hints.ai_socktype = SOCK_STREAM;
        addrinfo* res = nullptr;
        if (getaddrinfo(host.c_str(), portstr.c_str(), &hints, &res) == 0) {
            for (addrinfo* ai = res; ai; ai = ai->ai_next) {
                const int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
                if (fd < 0) continue;
                if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
                    freeaddrinfo(res);
                    return std::make_unique<TcpChannel>(fd, timeout);
                }
                ::close(fd);
            }
            freeaddrinfo(res);
        }
        if (std::chrono::steady_clock::now() >= deadline)
            throw transport_error("tcp connect: " + host + ":" + portstr + " unreachable");
        std::this_thread::sleep_for(Millis(20));
    }
}

// Tees every byte crossing a channel; used by transcript-equality tests.
class RecordingChannel final : public Channel {
public:
    struct Transcript {
        std::vector<uint8_t> sent, received;
    };

    RecordingChannel(std::unique_ptr<Channel> inner, std::shared_ptr<Transcript> log)
        : inner_(std::move(inner)), log_(std::move(log)) {}

    void send(std::span<const uint8_t> data) override {
        log_->sent.insert(log_->sent.end(), data.begin(), data.end());
        inner_->send(data);
    }

    void recv(uint8_t* out, size_t len) override {
        inner_->recv(out, len);
        log_->received.insert(log_->received.end(), out, out + len);
    }

private:
    std::unique_ptr<Channel> inner_;
    std::shared_ptr<Transcript> log_;
};

// --- framing and rounds -------------------------------------------------------

using SessionId = std::array<uint8_t, 16>;
using ConfigDigest = std::array<uint8_t, 28>;  // SHA-224 of the session config

inline constexpr uint16_t kProtocolVersion = 1;
inline constexpr size_t kFrameHeaderBytes = 16 + 8 + 4;  // session id, seq, payload len
inline constexpr uint32_t kMaxPayload = uint32_t(1) << 30;

inline SessionId random_session_id() {
    SecureRng rng;
    SessionId id;
    for (size_t i = 0; i < id.size(); i += 8) {
        const uint64_t w = rng.word();
        for (size_t j = 0; j < 8; j++) id[i + j] = uint8_t(w >> (8 * j));
    }
    return id;
}

struct Counters {
    uint64_t rounds = 0;
    uint64_t bytes_sent = 0;
    uint64_t bytes_received = 0;
    double seconds = 0;
};

struct PhaseStats {
    std::string name;
    uint64_t rounds = 0;
    uint64_t bytes_sent = 0;
    uint64_t bytes_received = 0;
    double seconds = 0;
};

// Lockstep round structure over a Channel: every round, both parties send
// exactly one frame and receive exactly one. Alice writes first and Bob
// replies, so simultaneous large sends cannot deadlock a TCP socket.
// Sequence numbers keep the two sides in sync; any gap or session-id
// mismatch aborts the session.
class Transport {
public:
    Transport(std::unique_ptr<Channel> ch, Party me)
        : ch_(std::move(ch)), me_(me), start_(std::chrono::steady_clock::now()) {}

    Party party() const { return me_; }
    const SessionId& session_id() const { return id_; }

    // Round 0. Exchanges version, declared party, session id, and the
    // session-config digest; any disagreement aborts. Alice's session id
    // wins unless Bob pinned one.
    void handshake(const ConfigDigest& digest, std::optional<SessionId> want_id = {}) {
        if (shaken_) throw usage_error("handshake: already performed");
        if (me_ == Party::alice) {
            id_ = want_id ? *want_id : random_session_id();
        } else if (want_id) {
            id_ = *want_id;
            pinned_ = true;
        }

        std::vector<uint8_t> hello;
        hello.insert(hello.end(), {'M', 'P', 'T', 'X'});
        hello.push_back(uint8_t(kProtocolVersion & 0xff));
        hello.push_back(uint8_t(kProtocolVersion >> 8));
        hello.push_back(uint8_t(me_));
        hello.insert(hello.end(), digest.begin(), digest.end());

        std::vector<uint8_t> peer;
        if (me_ == Party::alice) {
            send_frame(hello);
            peer = recv_frame();
        } else {
            peer = recv_frame();  // adopts alice's session id unless pinned
            send_frame(hello);
        }
        finish_round(hello.size(), peer.size());

        if (peer.size() != hello.size() || peer[0] != 'M' || peer[1] != 'P' ||
            peer[2] != 'T' || peer[3] != 'X')
            throw transport_error("handshake: malformed hello");
        const uint16_t peer_version = uint16_t(peer[4]) | uint16_t(peer[5]) << 8;
        if (peer_version != kProtocolVersion)
            throw transport_error("handshake: version mismatch (peer " +
                                  std::to_string(peer_version) + ", local " +
                                  std::to_string(kProtocolVersion) + ")");
        if (peer[6] != uint8_t(other(me_)))
            throw transport_error("handshake: both endpoints claim the same role");
        if (!std::equal(digest.begin(), digest.end(), peer.begin() + 7))
            throw transport_error("handshake: session config digest mismatch "
                                  "(parties configured differently)");
        shaken_ = true;
    }

    // One full protocol round. Both parties must call it the same number of
    // times with structurally agreed payload sizes; a one-directional
    // message is a round with an empty payload on one side.
    std::vector<uint8_t> exchange(std::span<const uint8_t> payload) {
        if (!shaken_) throw usage_error("exchange: handshake not performed");
        std::vector<uint8_t> in;
        if (me_ == Party::alice) {
            send_frame(payload);
            in = recv_frame();
        } else {
            in = recv_frame();
            send_frame(payload);
        }
        finish_round(payload.size(), in.size());
        return in;
    }

    Counters counters() const {
        Counters c = counters_;
        c.seconds = elapsed();
        return c;
    }

    void mark_phase(std::string name) {
        marks_.push_back({std::move(name), counters_.rounds, counters_.bytes_sent,
                          counters_.bytes_received, elapsed()});
    }

    // Per-phase deltas between consecutive marks (first phase starts at 0).
    std::vector<PhaseStats> phases() const {
        std::vector<PhaseStats> out;
        PhaseStats prev{"", 0, 0, 0, 0};
        for (const auto& mark : marks_) {
            out.push_back({mark.name, mark.rounds - prev.rounds,
                           mark.bytes_sent - prev.bytes_sent,
                           mark.bytes_received - prev.bytes_received,
                           mark.seconds - prev.seconds});
            prev = mark;
        }
        return out;
    }

    // (sent, received) payload bytes for every completed round, handshake
    // included; the leakage-shape tests compare these across sessions.
    const std::vector<std::pair<uint32_t, uint32_t>>& round_payloads() const {
        return round_payloads_;
    }

private:
    double elapsed() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

    void finish_round(size_t sent, size_t received) {
        counters_.rounds++;
        seq_++;
        round_payloads_.emplace_back(uint32_t(sent), uint32_t(received));
    }

    void send_frame(std::span<const uint8_t> payload) {
        if (payload.size() > kMaxPayload) throw transport_error("send: payload too large");
        std::vector<uint8_t> frame;
        frame.reserve(kFrameHeaderBytes + payload.size());
        frame.insert(frame.end(), id_.begin(), id_.end());
        put_u64_le(frame, seq_);
        put_u32_le(frame, uint32_t(payload.size()));
        frame.insert(frame.end(), payload.begin(), payload.end());
        ch_->send(frame);
        counters_.bytes_sent += frame.size();
    }

    std::vector<uint8_t> recv_frame() {
        std::array<uint8_t, kFrameHeaderBytes> header;
        ch_->recv(header.data(), header.size());
        SessionId peer_id;
        std::copy_n(header.begin(), 16, peer_id.begin());
        const uint64_t seq = get_u64_le(header, 16);
        const uint32_t len = get_u32_le(header, 24);

        if (seq_ == 0 && me_ == Party::bob && !pinned_) {
            id_ = peer_id;  // adopt alice's session id
        } else if (peer_id != id_) {
            throw transport_error("recv: frame for a different session");
        }
        if (seq != seq_)
            throw transport_error("recv: sequence violation (expected " + std::to_string(seq_) +
                                  ", got " + std::to_string(seq) + ")");
        if (len > kMaxPayload) throw transport_error("recv: oversized payload");

        std::vector<uint8_t> payload(len);
        if (len) ch_->recv(payload.data(), len);
        counters_.bytes_received += kFrameHeaderBytes + uint64_t(len);
        return payload;
    }

    std::unique_ptr<Channel> ch_;
    Party me_;
    SessionId id_{};
    bool pinned_ = false;
    bool shaken_ = false;
    uint64_t seq_ = 0;
    Counters counters_;
    std::vector<PhaseStats> marks_;
    std::vector<std::pair<uint32_t, uint32_t>> round_payloads_;
    std::chrono::steady_clock::time_point start_;
};

}  // namespace mpctext
