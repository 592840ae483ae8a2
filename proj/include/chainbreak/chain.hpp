#pragma once

// N-particle breaking chain in physical time s:
//
//   dx_i = -dH/dx_i ds + sigma dW_i,   2 <= i <= N-1,   H = sum_{i<j} U(x_i - x_j),
//
// with x_1 = 0 fixed and x_N(s) = (N-1)a(1 + eps s) pulled. Bond k joins
// particles k and k+1; the chain breaks when an adjacent gap reaches b.

#include <cstdint>
#include <span>
#include <vector>

#include "chainbreak/potential.hpp"

namespace chainbreak {

enum class ForceMode { AllPairs, NeighborList };

struct ChainConfig {
    int N = 3;
    Potential potential = Potential::quadratic(1.0, -4.0, 3.0, 2.0, 3.0);
    double sigma = 0.0;
    double epsilon = 0.0;
    double dt = 0.0;  ///< physical step; 0 selects the default
    std::uint64_t seed = 0;
    ForceMode force_mode = ForceMode::NeighborList;
    /// Brownian-bridge check for gaps that touch b between grid points.
    bool bridge_correction = true;

    /// Throws ConfigError on N < 3, eps <= 0, sigma < 0 or dt < 0.
    void validate() const;
    /// Physical time at which the mean gap reaches b: (b/a - 1)/eps.
    double s_close() const;
};

struct ChainBreakRecord {
    double break_time = 0.0;  ///< physical time
    int bond_index = 0;       ///< 1..N-1
    std::vector<double> gap_profile;
    std::uint64_t steps = 0;
    bool capped = false;

    bool operator==(const ChainBreakRecord&) const = default;
};

/// -dH/dx_i for every particle (fixed ends included). Pairs are visited in
/// (i, j > i) order in both modes; the neighbor list assumes ordered
/// positions and stops scanning at the first partner beyond range b.
std::vector<double> chain_forces(const Potential& potential, std::span<const double> x,
                                 ForceMode mode);

/// Physical default step min(0.01, 0.1/A1, sigma^2/4), A1 = 2 max U'' on [2a-b, b).
double chain_default_dt(const ChainConfig& cfg);

/// One trajectory; normals for trial `trial` come from the Wiener stream of
/// (cfg.seed, trial), drawn for particles 2..N-1 in order each step.
ChainBreakRecord simulate_chain(const ChainConfig& cfg, std::uint64_t trial = 0);

struct ChainHistogram {
    std::vector<std::uint64_t> counts;  ///< counts[k-1] for bond k
    std::uint64_t n = 0;
    std::uint64_t capped = 0;

    double fraction(int bond) const;
};

/// First-breaking bond over trials 0..n-1.
ChainHistogram break_location_histogram(const ChainConfig& cfg, std::uint64_t n,
                                        unsigned threads = 0);

const char* to_string(ForceMode mode);

}  // namespace chainbreak
