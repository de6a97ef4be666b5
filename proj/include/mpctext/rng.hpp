#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>

#include <openssl/rand.h>

#include "mpctext/errors.hpp"

namespace mpctext {

struct Rng {
    virtual ~Rng() = default;
    virtual uint64_t word() = 0;
    uint64_t bit() { return word() & 1; }
};

// Deterministic generator for reproducible dealing in tests. mt19937_64 is
// fully pinned by the standard, so seeded bundles are byte-identical across
// platforms. Not suitable for production dealing.
class SeededRng final : public Rng {
public:
    explicit SeededRng(const std::array<uint8_t, 32>& seed) {
        std::seed_seq seq(seed.begin(), seed.end());
        engine_.seed(seq);
    }

    uint64_t word() override { return engine_(); }

private:
    std::mt19937_64 engine_;
};

class SecureRng final : public Rng {
public:
    uint64_t word() override {
        if (fill_ == 0) refill();
        return buf_[--fill_];
    }

private:
    void refill() {
        if (RAND_bytes(reinterpret_cast<unsigned char*>(buf_.data()),
                       int(buf_.size() * sizeof(uint64_t))) != 1)
            throw error("SecureRng: RAND_bytes failed");
        fill_ = buf_.size();
    }

    std::array<uint64_t, 512> buf_{};
    size_t fill_ = 0;
};

inline std::unique_ptr<Rng> make_rng(const std::optional<std::array<uint8_t, 32>>& seed) {
    if (seed) return std::make_unique<SeededRng>(*seed);
    return std::make_unique<SecureRng>();
}

}  // namespace mpctext
