#pragma once

// Euler-Maruyama stepping shared by the trajectory simulators. The observer
// sees (t, x) at t = 0 and after every step that stays inside the domain.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "chainbreak/dynamics.hpp"
#include "chainbreak/errors.hpp"
#include "chainbreak/rng.hpp"

namespace chainbreak::detail {

// Bridge crossing probabilities below exp(-kBridgeCutoff) are not sampled.
inline constexpr double kBridgeCutoff = 50.0;

/// Probability that a Brownian bridge between distances d0, d1 > 0 from a
/// linear boundary touches it during a step of variance `step_var`.
inline double bridge_exit_probability(double d0, double d1, double step_var) {
    return std::exp(-2.0 * d0 * d1 / step_var);
}

template <class Observer>
BreakRecord integrate(const ModelParams& params, const IntegratorConfig& cfg, Observer&& observe) {
    const double eps = params.epsilon;
    const double sigma = params.sigma;
    const double b = params.b();
    const double t_close = params.t_close();
    const double h = rescaled_step(params, cfg);

    if (cfg.scheme == Scheme::ExplicitEM && a1_estimate(params) * h / eps >= 1.0) {
        throw PreconditionError("dt too large for the explicit scheme: need dt < 1/A1 (physical)");
    }

    // Per full step: drift multiplier on the force, noise standard deviation.
    const bool physical = cfg.frame == Frame::Physical;
    const double frame_dt = physical ? h / eps : h;
    const double drift_scale = physical ? frame_dt : frame_dt / eps;
    const double noise_sd = physical ? sigma * std::sqrt(frame_dt)
                                     : sigma / std::sqrt(eps) * std::sqrt(frame_dt);

    RandomStream wiener(cfg.seed, cfg.trial_index, StreamId::Wiener);
    RandomStream coins(cfg.seed, cfg.trial_index, StreamId::BridgeCoins);

    double x = params.a();
    double t = 0.0;
    std::uint64_t steps = 0;
    observe(t, x);

    const auto max_steps = static_cast<std::uint64_t>(std::ceil(t_close / h)) + 2;
    while (steps < max_steps) {
        const double t_grid = static_cast<double>(steps + 1) * h;
        const bool last = t_grid >= t_close;
        const double t_next = last ? t_close : t_grid;
        const double frac = last ? (t_next - t) / h : 1.0;
        const double ds = drift_scale * frac;
        const double noise = noise_sd * std::sqrt(frac) * wiener.normal();
        const double f = params.force(x, t);

        double x_next;
        if (cfg.scheme == Scheme::ExplicitEM) {
            x_next = x + f * ds + noise;
        } else {
            const double slope = params.force_derivative(x, t);
            x_next = x + (f * ds + noise) / (1.0 - slope * ds);
        }
        ++steps;

        const double lo0 = params.right_end(t) - b;
        const double lo1 = params.right_end(t_next) - b;
        const double up0 = b - x;
        const double up1 = b - x_next;
        const double dn0 = x - lo0;
        const double dn1 = x_next - lo1;

        if (last) {
            // The domain is empty at t_close.
            BreakRecord rec;
            rec.tau = t_close;
            rec.side = (x_next - params.midpoint(t_next) > 0.0) ? Side::Left : Side::Right;
            rec.x_at_exit = b;
            rec.steps = steps;
            rec.capped = true;
            return rec;
        }

        const bool crossed_up = up1 <= 0.0;
        const bool crossed_dn = dn1 <= 0.0;
        if (crossed_up || crossed_dn) {
            BreakRecord rec;
            rec.steps = steps;
            if (cfg.crossing == Crossing::Grid) {
                rec.side = crossed_dn ? Side::Right : Side::Left;
                rec.tau = t_next;
            } else {
                constexpr double inf = std::numeric_limits<double>::infinity();
                const double th_up = crossed_up ? up0 / (up0 - up1) : inf;
                const double th_dn = crossed_dn ? dn0 / (dn0 - dn1) : inf;
                rec.side = (th_up < th_dn) ? Side::Left : Side::Right;
                const double theta = std::clamp(std::min(th_up, th_dn), 0.0, 1.0);
                rec.tau = t + theta * (t_next - t);
            }
            rec.x_at_exit = rec.side == Side::Left ? b : params.right_end(rec.tau) - b;
            return rec;
        }

        if (cfg.crossing == Crossing::BridgeCorrected && sigma > 0.0) {
            const double var = noise_sd * noise_sd * frac;
            bool hit_up = false;
            bool hit_dn = false;
            if (2.0 * up0 * up1 / var < kBridgeCutoff) {
                hit_up = coins.uniform() < bridge_exit_probability(up0, up1, var);
            }
            if (2.0 * dn0 * dn1 / var < kBridgeCutoff) {
                hit_dn = coins.uniform() < bridge_exit_probability(dn0, dn1, var);
            }
            if (hit_up || hit_dn) {
                // Crossing time inside the step is not resolved; use the midpoint.
                BreakRecord rec;
                rec.steps = steps;
                rec.side = hit_dn ? Side::Right : Side::Left;
                rec.tau = t + 0.5 * (t_next - t);
                rec.x_at_exit = rec.side == Side::Left ? b : params.right_end(rec.tau) - b;
                return rec;
            }
        }

        x = x_next;
        t = t_next;
        observe(t, x);
    }
    throw IntegrationError("trajectory did not reach domain closure");
}

}  // namespace chainbreak::detail
