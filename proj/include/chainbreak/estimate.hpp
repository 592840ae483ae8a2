#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace chainbreak {

inline constexpr double kZ95 = 1.959963984540054;
inline constexpr double kZ99 = 2.5758293035489004;

/// Monte Carlo estimate of a probability.
struct EstimateResult {
    double p_hat = 0.0;
    std::uint64_t n = 0;
    std::uint64_t successes = 0;
    double ci_low = 0.0;   ///< 95% Wilson interval
    double ci_high = 1.0;
    std::uint64_t capped_count = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> warnings;

    /// Binomial standard error sqrt(p(1-p)/n).
    double standard_error() const;
};

/// Wilson score interval for `successes` out of `n` at normal quantile z.
std::pair<double, double> wilson_interval(std::uint64_t successes, std::uint64_t n, double z);

EstimateResult make_estimate(std::uint64_t successes, std::uint64_t n,
                             std::uint64_t capped_count = 0, std::uint64_t seed = 0);

/// True when the Wilson intervals of two estimates at quantile z overlap.
bool intervals_overlap(const EstimateResult& lhs, const EstimateResult& rhs, double z);

}  // namespace chainbreak
