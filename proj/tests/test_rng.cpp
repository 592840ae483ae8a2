#include <cmath>
#include <set>

#include "chainbreak/rng.hpp"
#include "doctest.h"

using namespace chainbreak;

TEST_CASE("philox known-answer vectors") {
    using C = Philox4x32::Counter;
    using K = Philox4x32::Key;
    CHECK(Philox4x32::block(C{0, 0, 0, 0}, K{0, 0}) ==
          C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(Philox4x32::block(C{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff},
                            K{0xffffffff, 0xffffffff}) ==
          C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(Philox4x32::block(C{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344},
                            K{0xa4093822, 0x299f31d0}) ==
          C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("philox block is usable at compile time") {
    constexpr auto out = Philox4x32::block({0, 0, 0, 0}, {0, 0});
    static_assert(out[0] == 0x6627e8d5u);
}

TEST_CASE("streams are pure functions of their address") {
    RandomStream a(42, 7, StreamId::Wiener);
    RandomStream b(42, 7, StreamId::Wiener);
    for (int i = 0; i < 1000; ++i) REQUIRE(a.normal() == b.normal());
    CHECK(a.blocks_used() == b.blocks_used());
}

TEST_CASE("distinct addresses give distinct sequences") {
    std::set<double> firsts;
    for (std::uint64_t seed : {0ull, 1ull}) {
        for (std::uint64_t trial : {0ull, 1ull, (1ull << 40)}) {
            for (auto id : {StreamId::Wiener, StreamId::BridgeCoins, StreamId::Auxiliary}) {
                RandomStream s(seed, trial, id);
                firsts.insert(s.uniform());
            }
        }
    }
    CHECK(firsts.size() == 18);
}

TEST_CASE("uniforms lie in the open unit interval with the right moments") {
    RandomStream s(3, 0, StreamId::Auxiliary);
    constexpr int n = 200000;
    double sum = 0.0;
    double sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = s.uniform();
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
        sum += u;
        sum2 += u * u;
    }
    const double mean = sum / n;
    CHECK(std::abs(mean - 0.5) < 5.0 * std::sqrt(1.0 / 12.0 / n));
    CHECK(std::abs(sum2 / n - mean * mean - 1.0 / 12.0) < 2e-3);
}

TEST_CASE("normals have zero mean, unit variance and a Gaussian tail") {
    RandomStream s(11, 5, StreamId::Wiener);
    constexpr int n = 200000;
    double sum = 0.0;
    double sum2 = 0.0;
    int tail = 0;
    for (int i = 0; i < n; ++i) {
        const double z = s.normal();
        sum += z;
        sum2 += z * z;
        tail += z > 2.0 ? 1 : 0;
    }
    CHECK(std::abs(sum / n) < 5.0 / std::sqrt(n));
    CHECK(std::abs(sum2 / n - 1.0) < 5.0 * std::sqrt(2.0 / n));
    const double p = 0.5 * std::erfc(2.0 / std::sqrt(2.0));
    CHECK(std::abs(static_cast<double>(tail) / n - p) < 5.0 * std::sqrt(p * (1 - p) / n));
}
