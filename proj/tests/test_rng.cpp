#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "bridgeout/rng.hpp"

using namespace bridgeout;

TEST_CASE("identical (seed, stream) replays the same sequence") {
    RngStream a(1234, 5), b(1234, 5);
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("sequence is a pure function of the counter") {
    RngStream a(7, 7);
    std::vector<std::uint64_t> first;
    for (int i = 0; i < 16; ++i) first.push_back(a.next_u64());
    a.set_counter(0);
    for (int i = 0; i < 16; ++i) CHECK(a.next_u64() == first[i]);
}

TEST_CASE("distinct streams decorrelate") {
    RngStream a(42, 0), b(42, 1);
    int agree = 0;
    const int n = 4096;
    for (int i = 0; i < n; ++i)
        agree += (a.next_u64() & 1) == (b.next_u64() & 1);
    // Around n/2 matches for independent bit streams.
    CHECK(agree > n / 2 - 4 * 32);
    CHECK(agree < n / 2 + 4 * 32);
}

TEST_CASE("split children differ from the parent and each other") {
    RngStream parent(5, 9);
    RngStream c1 = parent.split(1), c2 = parent.split(2), c1_again = parent.split(1);
    CHECK(c1.next_u64() != c2.next_u64());
    RngStream c1_fresh = parent.split(1);
    CHECK(c1_again.next_u64() == c1_fresh.next_u64());
}

TEST_CASE("uniform doubles live in [0,1) with a sane mean") {
    RngStream rng(11, 2);
    double acc = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.next_double();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        acc += u;
    }
    const double se = std::sqrt(1.0 / 12.0 / n);
    CHECK(std::fabs(acc / n - 0.5) < 4.0 * se);
}

TEST_CASE("next_below is uniform over small bounds") {
    RngStream rng(3, 3);
    const std::uint64_t bound = 7;
    std::vector<int> counts(bound, 0);
    const int n = 70000;
    for (int i = 0; i < n; ++i) counts[rng.next_below(bound)] += 1;
    for (std::uint64_t v = 0; v < bound; ++v) {
        const double expect = static_cast<double>(n) / static_cast<double>(bound);
        const double se = std::sqrt(expect * (1.0 - 1.0 / static_cast<double>(bound)));
        CHECK(std::fabs(counts[v] - expect) < 5.0 * se);
    }
}

TEST_CASE("gaussian moments") {
    RngStream rng(17, 4);
    const int n = 200000;
    double mean = 0.0, m2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double g = rng.next_gaussian();
        mean += g;
        m2 += g * g;
    }
    mean /= n;
    m2 /= n;
    CHECK(std::fabs(mean) < 4.0 / std::sqrt(static_cast<double>(n)));
    CHECK(std::fabs(m2 - 1.0) < 5.0 * std::sqrt(2.0 / static_cast<double>(n)));
}
