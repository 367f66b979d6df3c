#pragma once

#include <cstdint>

namespace bridgeout {

// Counter-based random stream. Output i is a pure function of
// (seed, stream_id, i), so a stream can be replayed from any counter and
// identical (seed, stream_id) pairs produce identical sequences on every
// platform. Distinct stream_ids give independent sequences, which is how
// trials, mask draws and data shuffles are kept from interfering.
class RngStream {
public:
    RngStream() : RngStream(0, 0) {}
    RngStream(std::uint64_t seed, std::uint64_t stream_id);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }
    std::uint64_t counter() const { return counter_; }
    void set_counter(std::uint64_t c) { counter_ = c; }

    // Derives an independent child stream; same (seed, stream_id, purpose)
    // always yields the same child.
    RngStream split(std::uint64_t purpose) const;

    std::uint64_t next_u64();

    // Uniform on [0, 1) with 53 random bits.
    double next_double();

    // Uniform integer in [0, bound); bound > 0.
    std::uint64_t next_below(std::uint64_t bound);

    bool next_bernoulli(double p) { return next_double() < p; }

    // Standard normal via Box-Muller on two uniform draws.
    double next_gaussian();

private:
    std::uint64_t key_;
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::uint64_t counter_ = 0;
};

}  // namespace bridgeout
