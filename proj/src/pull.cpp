#include "chainbreak/pull.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "chainbreak/errors.hpp"

namespace chainbreak {

PullSchedule PullSchedule::linear() { return PullSchedule{}; }

PullSchedule PullSchedule::polynomial(std::vector<double> coeffs) {
    if (coeffs.size() < 2) throw ConfigError("pull schedule needs at least a linear term");
    if (coeffs[0] != 0.0) throw ConfigError("pull schedule must satisfy p(0) = 0");
    for (double c : coeffs) {
        if (!std::isfinite(c)) throw ConfigError("pull schedule coefficients must be finite");
    }
    if (!(coeffs[1] > 0.0)) throw ConfigError("pull schedule must start with p'(0) > 0");
    PullSchedule p;
    p.coeffs_ = std::move(coeffs);
    return p;
}

double PullSchedule::operator()(double t) const {
    double acc = 0.0;
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * t + *it;
    return acc;
}

double PullSchedule::rate(double t) const {
    double acc = 0.0;
    for (std::size_t k = coeffs_.size() - 1; k >= 1; --k) {
        acc = acc * t + static_cast<double>(k) * coeffs_[k];
    }
    return acc;
}

double PullSchedule::inverse(double target) const {
    if (!(target >= 0.0)) throw PreconditionError("pull inverse needs a non-negative target");
    if (target == 0.0) return 0.0;
    if (is_linear()) return target;
    double hi = target / coeffs_[1];
    int guard = 0;
    while ((*this)(hi) < target) {
        hi *= 2.0;
        if (++guard > 200) throw ConfigError("pull schedule never reaches the closure strain");
    }
    double lo = 0.0;
    for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        if ((*this)(mid) < target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return hi;
}

std::pair<double, double> PullSchedule::rate_bounds(double horizon, int samples) const {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (int k = 0; k <= samples; ++k) {
        const double r = rate(horizon * k / samples);
        lo = std::min(lo, r);
        hi = std::max(hi, r);
    }
    if (!(lo > 0.0)) throw ConfigError("pull schedule must be strictly increasing");
    return {lo, hi};
}

}  // namespace chainbreak
