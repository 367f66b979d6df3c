#include "bridgeout/rng.hpp"

#include <cmath>

#include "bridgeout/errors.hpp"

namespace bridgeout {
namespace {

constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;

// splitmix64 finalizer
std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
    key_ = mix64(mix64(seed + kGamma) ^ mix64(stream_id ^ 0xD1B54A32D192ED03ull));
}

RngStream RngStream::split(std::uint64_t purpose) const {
    return RngStream(seed_, mix64(stream_id_ * kGamma + 0x2545F4914F6CDD1Dull) ^ purpose);
}

std::uint64_t RngStream::next_u64() {
    return mix64(key_ + kGamma * ++counter_);
}

double RngStream::next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t RngStream::next_below(std::uint64_t bound) {
    if (bound == 0) throw ConfigError("RngStream::next_below: bound must be positive");
    // Lemire's multiply-shift with rejection for exact uniformity.
    std::uint64_t x = next_u64();
    unsigned __int128 m = static_cast<unsigned __int128>(x) * bound;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < bound) {
        std::uint64_t threshold = -bound % bound;
        while (lo < threshold) {
            x = next_u64();
            m = static_cast<unsigned __int128>(x) * bound;
            lo = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

double RngStream::next_gaussian() {
    // u1 in (0, 1] keeps the log finite.
    double u1 = 1.0 - next_double();
    double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
}

}  // namespace bridgeout
