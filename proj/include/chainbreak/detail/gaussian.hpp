#pragma once

#include <cmath>
#include <cstdint>

#include "chainbreak/deviation.hpp"

namespace chainbreak::detail {

/// Euler-Maruyama for dy0 = (A(t)/eps) y0 dt + sigma/sqrt(eps) dW on the
/// grid t0 + n h, with a shortened final step onto t_end. `normal()` yields
/// standard normals. `observe(t_prev, y_prev, t, y, step_var)` returns false
/// to stop early. Returns the number of steps taken.
template <class Normal, class Observer>
std::uint64_t step_gaussian(const LinearizationData& lin, double sigma, double h, double t0,
                            double y_init, double t_end, Normal&& normal, Observer&& observe) {
    const double eps = lin.params().epsilon;
    const double noise_coef = sigma / std::sqrt(eps);
    double t = t0;
    double y = y_init;
    std::uint64_t n = 0;
    while (t < t_end) {
        const double t_grid = t0 + static_cast<double>(n + 1) * h;
        const double t_next = t_grid >= t_end ? t_end : t_grid;
        const double dh = t_next - t;
        const double var = noise_coef * noise_coef * dh;
        const double y_next = y + lin.A_at(t) / eps * y * dh + std::sqrt(var) * normal();
        ++n;
        if (!observe(t, y, t_next, y_next, var)) break;
        t = t_next;
        y = y_next;
    }
    return n;
}

}  // namespace chainbreak::detail
