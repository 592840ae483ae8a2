#pragma once

#include <vector>

namespace chainbreak {

/// Stretching schedule p(t) for the pulled end, x_R(t) = 2a(1 + p(t)).
/// Stored as a polynomial in ascending powers of t with p(0) = 0.
class PullSchedule {
  public:
    /// p(t) = t.
    static PullSchedule linear();
    /// p(t) = sum_k coeffs[k] t^k; coeffs[0] must be 0.
    static PullSchedule polynomial(std::vector<double> coeffs);

    double operator()(double t) const;
    double rate(double t) const;
    /// Smallest t >= 0 with p(t) = target (target >= 0).
    double inverse(double target) const;

    const std::vector<double>& coeffs() const { return coeffs_; }
    bool is_linear() const { return coeffs_.size() == 2 && coeffs_[1] == 1.0; }

    /// Checks p' > 0 on [0, horizon]; returns the sampled (min, max) of p'.
    std::pair<double, double> rate_bounds(double horizon, int samples = 1000) const;

  private:
    std::vector<double> coeffs_{0.0, 1.0};
};

}  // namespace chainbreak
