#include "chainbreak/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include "chainbreak/detail/integrate.hpp"
#include "chainbreak/errors.hpp"
#include "chainbreak/parallel.hpp"

namespace chainbreak {

double ModelParams::t_close() const { return pull.inverse(b() / a() - 1.0); }

void ModelParams::validate() const {
    if (!(std::isfinite(epsilon) && epsilon > 0.0)) throw ConfigError("epsilon must be > 0");
    if (!(std::isfinite(sigma) && sigma >= 0.0)) throw ConfigError("sigma must be >= 0");
    if (pull(0.0) != 0.0) throw ConfigError("pull schedule must satisfy p(0) = 0");
    pull.rate_bounds(t_close());
}

double ModelParams::force_derivative(double x, double t) const {
    const double gap = right_end(t) - x;
    if (drift_potential == DriftPotential::Raw) {
        return -potential.base().d2(x) - potential.base().d2(gap);
    }
    return -potential.d2(x) - potential.d2(gap);
}

double right_endpoint(const ModelParams& params, double t) {
    if (!(t >= 0.0)) throw PreconditionError("right_endpoint needs t >= 0");
    return params.right_end(t);
}

double drift(const ModelParams& params, double x, double t, Frame frame) {
    const double f = params.force(x, t);
    return frame == Frame::Rescaled ? f / params.epsilon : f;
}

double a1_estimate(const ModelParams& params) {
    // Both arguments of U~'' stay in [2a - b, b] while the chain is unbroken.
    const double lo = 2.0 * params.a() - params.b();
    const double hi = params.b();
    double peak = 0.0;
    constexpr int n = 1000;
    for (int k = 0; k <= n; ++k) {
        peak = std::max(peak, params.potential.d2(lo + (hi - lo) * k / n));
    }
    return 2.0 * peak;
}

double default_dt(const ModelParams& params, Frame frame) {
    double dt = std::min(0.01, 0.1 / a1_estimate(params));
    if (params.sigma > 0.0) dt = std::min(dt, params.sigma * params.sigma / 4.0);
    return frame == Frame::Physical ? dt : dt * params.epsilon;
}

double rescaled_step(const ModelParams& params, const IntegratorConfig& cfg) {
    if (cfg.dt < 0.0 || !std::isfinite(cfg.dt)) throw ConfigError("dt must be > 0");
    const double dt = cfg.dt > 0.0 ? cfg.dt : default_dt(params, cfg.frame);
    return cfg.frame == Frame::Physical ? dt * params.epsilon : dt;
}

DeterministicPath::DeterministicPath(std::vector<double> x, std::vector<double> slope,
                                     double step)
    : x_(std::move(x)), slope_(std::move(slope)), step_(step) {}

namespace {

struct Cell {
    std::size_t i;
    double theta;
};

Cell locate(double t, double step, std::size_t size) {
    const double pos = std::clamp(t / step, 0.0, static_cast<double>(size - 1));
    auto i = static_cast<std::size_t>(pos);
    if (i >= size - 1) i = size - 2;
    return {i, pos - static_cast<double>(i)};
}

}  // namespace

double DeterministicPath::at(double t) const {
    const auto [i, s] = locate(t, step_, x_.size());
    const double h = step_;
    const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
    const double h10 = s * (1 - s) * (1 - s);
    const double h01 = s * s * (3 - 2 * s);
    const double h11 = s * s * (s - 1);
    return h00 * x_[i] + h10 * h * slope_[i] + h01 * x_[i + 1] + h11 * h * slope_[i + 1];
}

double DeterministicPath::slope_at(double t) const {
    const auto [i, s] = locate(t, step_, x_.size());
    const double h = step_;
    const double d00 = 6 * s * s - 6 * s;
    const double d10 = 3 * s * s - 4 * s + 1;
    const double d01 = -6 * s * s + 6 * s;
    const double d11 = 3 * s * s - 2 * s;
    return (d00 * x_[i] + d01 * x_[i + 1]) / h + d10 * slope_[i] + d11 * slope_[i + 1];
}

DeterministicPath solve_deterministic(const ModelParams& params, double dt) {
    params.validate();
    if (!(dt > 0.0)) throw PreconditionError("deterministic step must be positive");
    const double eps = params.epsilon;
    const double t_close = params.t_close();
    const auto steps = static_cast<std::size_t>(std::ceil(t_close / dt));
    const double h = t_close / static_cast<double>(steps);

    // RK4 is stable for h*lambda < 2.78 on the negative real axis.
    if (a1_estimate(params) * h / eps > 2.5) {
        throw IntegrationError("deterministic step too large for the stiffness 1/eps; use dt < " +
                               std::to_string(2.5 * eps / a1_estimate(params)));
    }

    auto rhs = [&](double t, double x) { return params.force(x, t) / eps; };
    auto rk4 = [&](double t, double x, double dh) {
        const double k1 = rhs(t, x);
        const double k2 = rhs(t + dh / 2, x + dh / 2 * k1);
        const double k3 = rhs(t + dh / 2, x + dh / 2 * k2);
        const double k4 = rhs(t + dh, x + dh * k3);
        return x + dh / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    };

    const double tol = 1e-6 * (params.b() - params.a());
    std::vector<double> xs(steps + 1);
    std::vector<double> slopes(steps + 1);
    xs[0] = params.a();
    slopes[0] = rhs(0.0, xs[0]);
    for (std::size_t i = 0; i < steps; ++i) {
        const double t = h * static_cast<double>(i);
        const double full = rk4(t, xs[i], h);
        const double half = rk4(t + h / 2, rk4(t, xs[i], h / 2), h / 2);
        if (!(std::abs(full - half) <= tol)) {
            throw IntegrationError("local error estimate exceeded at t = " + std::to_string(t) +
                                   "; reduce dt");
        }
        const double t_next = h * static_cast<double>(i + 1);
        if (!(half > 0.0 && half < params.right_end(t_next))) {
            throw IntegrationError("deterministic path left (0, x_R(t)) at t = " +
                                   std::to_string(t_next));
        }
        xs[i + 1] = half;
        slopes[i + 1] = rhs(t_next, half);
    }
    return DeterministicPath(std::move(xs), std::move(slopes), h);
}

namespace {
struct NullObserver {
    void operator()(double, double) const {}
};
}  // namespace

BreakRecord simulate_trajectory(const ModelParams& params, const IntegratorConfig& cfg) {
    return detail::integrate(params, cfg, NullObserver{});
}

TrajectoryPath simulate_path(const ModelParams& params, const IntegratorConfig& cfg,
                             std::size_t thin) {
    if (thin == 0) throw PreconditionError("thinning factor must be >= 1");
    TrajectoryPath path;
    path.thin = thin;
    path.tag = NoiseTag{cfg.seed, cfg.trial_index, rescaled_step(params, cfg)};
    std::size_t count = 0;
    path.record = detail::integrate(params, cfg, [&](double t, double x) {
        if (count++ % thin == 0) {
            path.t.push_back(t);
            path.x.push_back(x);
        }
    });
    return path;
}

std::vector<BreakRecord> run_trials(const ModelParams& params, const IntegratorConfig& cfg,
                                    std::uint64_t n, unsigned threads) {
    if (n == 0) throw PreconditionError("empty experiment: n = 0");
    params.validate();
    std::vector<BreakRecord> out(n);
    parallel_for(n, threads, [&](std::size_t i) {
        IntegratorConfig local = cfg;
        local.trial_index = cfg.trial_index + i;
        out[i] = simulate_trajectory(params, local);
    });
    return out;
}

EstimateResult side_estimate(const std::vector<BreakRecord>& records, Side side,
                             std::uint64_t seed) {
    std::uint64_t hits = 0;
    std::uint64_t capped = 0;
    for (const auto& r : records) {
        hits += r.side == side ? 1 : 0;
        capped += r.capped ? 1 : 0;
    }
    return make_estimate(hits, records.size(), capped, seed);
}

FrameComparison equivalence_check(const ModelParams& params, const IntegratorConfig& physical,
                                  const IntegratorConfig& rescaled, std::uint64_t n,
                                  unsigned threads) {
    if (n == 0) throw PreconditionError("empty experiment: n = 0");
    if (physical.frame != Frame::Physical || rescaled.frame != Frame::Rescaled) {
        throw PreconditionError("equivalence_check needs one physical and one rescaled config");
    }
    FrameComparison cmp;
    cmp.physical = side_estimate(run_trials(params, physical, n, threads), Side::Left,
                                 physical.seed);
    cmp.rescaled = side_estimate(run_trials(params, rescaled, n, threads), Side::Left,
                                 rescaled.seed);
    cmp.consistent = intervals_overlap(cmp.physical, cmp.rescaled, kZ99);
    return cmp;
}

const char* to_string(Side side) { return side == Side::Left ? "left" : "right"; }

const char* to_string(Frame frame) { return frame == Frame::Physical ? "physical" : "rescaled"; }

const char* to_string(Scheme scheme) {
    return scheme == Scheme::ExplicitEM ? "explicit_em" : "semi_implicit_em";
}

const char* to_string(Crossing crossing) {
    switch (crossing) {
        case Crossing::Grid:
            return "grid";
        case Crossing::LinearInterp:
            return "linear_interp";
        default:
            return "bridge_corrected";
    }
}

}  // namespace chainbreak
