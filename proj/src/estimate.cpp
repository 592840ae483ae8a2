#include "chainbreak/estimate.hpp"

#include <algorithm>
#include <cmath>

#include "chainbreak/errors.hpp"

namespace chainbreak {

double EstimateResult::standard_error() const {
    if (n == 0) return 0.0;
    return std::sqrt(p_hat * (1.0 - p_hat) / static_cast<double>(n));
}

std::pair<double, double> wilson_interval(std::uint64_t successes, std::uint64_t n, double z) {
    if (n == 0) throw PreconditionError("empty experiment: n = 0");
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(successes) / nn;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double center = (p + z2 / (2.0 * nn)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
    // Rounding can push the ends past p_hat at p = 0 or 1.
    const double lo = std::clamp(std::min(center - half, p), 0.0, 1.0);
    const double hi = std::clamp(std::max(center + half, p), 0.0, 1.0);
    return {lo, hi};
}

EstimateResult make_estimate(std::uint64_t successes, std::uint64_t n,
                             std::uint64_t capped_count, std::uint64_t seed) {
    EstimateResult r;
    r.n = n;
    r.successes = successes;
    r.p_hat = static_cast<double>(successes) / static_cast<double>(n == 0 ? 1 : n);
    std::tie(r.ci_low, r.ci_high) = wilson_interval(successes, n, kZ95);
    r.capped_count = capped_count;
    r.seed = seed;
    if (capped_count * 100 > n) {
        r.warnings.push_back("more than 1% of trials were capped at domain closure (" +
                             std::to_string(capped_count) + " of " + std::to_string(n) + ")");
    }
    return r;
}

bool intervals_overlap(const EstimateResult& lhs, const EstimateResult& rhs, double z) {
    const auto [l1, h1] = wilson_interval(lhs.successes, lhs.n, z);
    const auto [l2, h2] = wilson_interval(rhs.successes, rhs.n, z);
    return l1 <= h2 && l2 <= h1;
}

}  // namespace chainbreak
