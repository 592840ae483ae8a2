#pragma once

// Counter-based random streams (Philox4x32-10).
//
// A stream is addressed by (seed, trial, stream id). Every output is a pure
// function of that address and the block counter, so per-trial streams are
// independent of thread scheduling.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace chainbreak {

class Philox4x32 {
  public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static constexpr Counter block(Counter ctr, Key key) {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += kW0;
                key[1] += kW1;
            }
            const std::uint64_t p0 = std::uint64_t{kM0} * ctr[0];
            const std::uint64_t p1 = std::uint64_t{kM1} * ctr[2];
            ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
                   static_cast<std::uint32_t>(p1),
                   static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
                   static_cast<std::uint32_t>(p0)};
        }
        return ctr;
    }

  private:
    static constexpr std::uint32_t kM0 = 0xD2511F53u;
    static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kW0 = 0x9E3779B9u;
    static constexpr std::uint32_t kW1 = 0xBB67AE85u;
};

/// Stream ids used by the simulators. Wiener increments and bridge-crossing
/// coins never share a counter space, so adding or removing coin draws leaves
/// the Brownian path unchanged.
enum class StreamId : std::uint32_t { Wiener = 0, BridgeCoins = 1, Auxiliary = 2 };

class RandomStream {
  public:
    // trial indices are limited to 48 bits; the top 16 bits of the counter
    // carry the stream id.
    RandomStream(std::uint64_t seed, std::uint64_t trial, StreamId stream)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          trial_lo_(static_cast<std::uint32_t>(trial)),
          trial_hi_(static_cast<std::uint32_t>((trial >> 32) & 0xFFFFu) |
                    (static_cast<std::uint32_t>(stream) << 16)) {}

    /// Uniform on the open interval (0, 1), 53-bit resolution.
    double uniform() {
        if (uniform_left_ == 0) refill();
        return uniforms_[--uniform_left_];
    }

    /// Standard normal via Box-Muller on one Philox block.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double phase = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(phase);
        has_spare_ = true;
        return r * std::cos(phase);
    }

    std::uint64_t blocks_used() const { return block_; }

  private:
    void refill() {
        const Philox4x32::Counter ctr{static_cast<std::uint32_t>(block_),
                                      static_cast<std::uint32_t>(block_ >> 32), trial_lo_,
                                      trial_hi_};
        const auto out = Philox4x32::block(ctr, key_);
        ++block_;
        const std::uint64_t w0 = (std::uint64_t{out[0]} << 32) | out[1];
        const std::uint64_t w1 = (std::uint64_t{out[2]} << 32) | out[3];
        // consumed back to front: uniforms_[1] first
        uniforms_[1] = to_open_unit(w0);
        uniforms_[0] = to_open_unit(w1);
        uniform_left_ = 2;
    }

    static double to_open_unit(std::uint64_t w) {
        return (static_cast<double>(w >> 11) + 0.5) * 0x1.0p-53;
    }

    Philox4x32::Key key_;
    std::uint32_t trial_lo_;
    std::uint32_t trial_hi_;
    std::uint64_t block_ = 0;
    std::array<double, 2> uniforms_{};
    int uniform_left_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace chainbreak
