#include "chainbreak/deviation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "chainbreak/detail/gaussian.hpp"
#include "chainbreak/errors.hpp"
#include "chainbreak/rng.hpp"

namespace chainbreak {

namespace {

constexpr int kMGridSteps = 400;
constexpr std::size_t kMMaxTimes = 2000;
constexpr double kMMargin = 1.1;

}  // namespace

LinearizationData::LinearizationData(ModelParams params, DeterministicPath path)
    : params_(std::move(params)), path_(std::move(path)) {
    const std::size_t n = path_.size();
    a_grid_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        a_grid_[i] = A_at(path_.time(i));
        if (!(a_grid_[i] < 0.0)) {
            throw ModelViolation("A(t) >= 0 at t = " + std::to_string(path_.time(i)) +
                                 ": convexity assumption broken");
        }
    }
    a0_ = -*std::max_element(a_grid_.begin(), a_grid_.end());
    a1_ = -*std::min_element(a_grid_.begin(), a_grid_.end());

    prefix_.assign(n, 0.0);
    for (std::size_t i = 1; i < n; ++i) {
        prefix_[i] = prefix_[i - 1] + 0.5 * path_.step() * (a_grid_[i - 1] + a_grid_[i]);
    }

    const double d_max = (params_.b() - params_.a()) / 2.0;
    const std::size_t stride = std::max<std::size_t>(1, n / kMMaxTimes);
    double worst = 0.0;
    for (std::size_t i = 0; i < n; i += stride) {
        const double t = path_.time(i);
        const double x = path_.values()[i];
        const double upper = params_.b() - x;
        const double lower = params_.right_end(t) - params_.b() - x;
        for (int k = 0; k <= kMGridSteps; ++k) {
            if (2 * k == kMGridSteps) continue;
            const double y = -d_max + 2.0 * d_max * k / kMGridSteps;
            if (!(y > lower && y < upper)) continue;
            worst = std::max(worst, std::abs(B(y, t)) / (y * y));
        }
    }
    m_raw_ = worst;
    m_ = kMMargin * worst;
}

double LinearizationData::A_at(double t) const {
    const double x = path_.at(t);
    const auto& u = params_.potential;
    return -u.d2(x) - u.d2(params_.right_end(t) - x);
}

double LinearizationData::B(double y, double t) const {
    const double x = path_.at(t);
    const double gap = params_.right_end(t) - x;
    const auto& u = params_.potential;
    return -u.d1(x + y) + u.d1(x) + u.d1(gap - y) - u.d1(gap) - A_at(t) * y;
}

double LinearizationData::prefix(double t) const {
    const double h = path_.step();
    const std::size_t n = path_.size();
    const double pos = std::clamp(t / h, 0.0, static_cast<double>(n - 1));
    auto i = static_cast<std::size_t>(pos);
    if (i >= n - 1) i = n - 2;
    const double dt = t - path_.time(i);
    const double theta = dt / h;
    const double a_here = a_grid_[i] + theta * (a_grid_[i + 1] - a_grid_[i]);
    return prefix_[i] + 0.5 * dt * (a_grid_[i] + a_here);
}

double LinearizationData::alpha(double t, double s) const { return prefix(t) - prefix(s); }

LinearizationData build_linearization(const ModelParams& params, double dt) {
    return LinearizationData(params, solve_deterministic(params, dt));
}

BoundaryCurves::BoundaryCurves(const ModelParams& params, const DeterministicPath& path)
    : params_(params), path_(path), t_close_(path.t_end()) {
    const double tol = 1e-12 * params.b();
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < path_.size(); ++i) {
        const double t = path_.time(i);
        const double dp = params_.b() - path_.values()[i];
        const double dm = params_.right_end(t) - params_.b() - path_.values()[i];
        if (dp < -dm - tol) dominance_ = false;
        if (!(dp < prev)) decreasing_ = false;
        prev = dp;
    }
}

double BoundaryCurves::d_plus(double t) const { return params_.b() - path_.at(t); }

double BoundaryCurves::d_minus(double t) const {
    return params_.right_end(t) - params_.b() - path_.at(t);
}

double BoundaryCurves::T_of_D(double D) const {
    const double level = D * D;
    auto g = [&](double t) { return -d_minus(t) - level; };
    if (g(0.0) <= 0.0) return 0.0;
    double lo = 0.0;
    double hi = t_close_;
    for (std::size_t i = 1; i < path_.size(); ++i) {
        if (g(path_.time(i)) <= 0.0) {
            lo = path_.time(i - 1);
            hi = path_.time(i);
            break;
        }
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (g(mid) > 0.0 ? lo : hi) = mid;
    }
    return hi;
}

BoundaryCurves boundary_curves(const ModelParams& params, const DeterministicPath& path) {
    return BoundaryCurves(params, path);
}

VarianceData::VarianceData(const LinearizationData& lin) : step_(lin.path().step()) {
    const double eps = lin.params().epsilon;
    const std::size_t n = lin.path().size();
    const double h = step_;
    auto rhs = [&](double t, double v) { return (2.0 * lin.A_at(t) * v + 1.0) / eps; };
    auto rk4 = [&](double t, double v) {
        const double k1 = rhs(t, v);
        const double k2 = rhs(t + h / 2, v + h / 2 * k1);
        const double k3 = rhs(t + h / 2, v + h / 2 * k2);
        const double k4 = rhs(t + h, v + h * k3);
        return v + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    };
    v_.assign(n, 0.0);
    xi_.assign(n, 0.0);
    xi_[0] = -1.0 / (2.0 * lin.A().front());
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double t = lin.path().time(i);
        v_[i + 1] = rk4(t, v_[i]);
        xi_[i + 1] = rk4(t, xi_[i]);
    }
    const auto [lo, hi] = std::minmax_element(xi_.begin(), xi_.end());
    xi_minus_ = *lo;
    xi_plus_ = *hi;
}

namespace {

double lerp_grid(const std::vector<double>& values, double step, double t) {
    const std::size_t n = values.size();
    const double pos = std::clamp(t / step, 0.0, static_cast<double>(n - 1));
    auto i = static_cast<std::size_t>(pos);
    if (i >= n - 1) i = n - 2;
    const double theta = pos - static_cast<double>(i);
    return values[i] + theta * (values[i + 1] - values[i]);
}

}  // namespace

double VarianceData::v_at(double t) const { return lerp_grid(v_, step_, t); }

double VarianceData::xi_at(double t) const { return lerp_grid(xi_, step_, t); }

double VarianceData::decay_constant(const LinearizationData& lin) const {
    const double eps = lin.params().epsilon;
    double c = 0.0;
    for (std::size_t i = 0; i < v_.size(); ++i) {
        const double weight = std::exp(2.0 * lin.alpha(lin.path().time(i)) / eps);
        if (weight < 1e-12) break;
        c = std::max(c, std::abs(xi_[i] - v_[i]) / weight);
    }
    return c;
}

Y0Path simulate_y0(const LinearizationData& lin, double sigma, double epsilon,
                   const IntegratorConfig& cfg, std::optional<double> t_end,
                   std::span<const double> increments) {
    const double eps = lin.params().epsilon;
    if (std::abs(epsilon - eps) > 1e-12 * eps) {
        throw PreconditionError("simulate_y0: epsilon differs from the linearisation's");
    }
    if (!(sigma >= 0.0)) throw PreconditionError("simulate_y0: sigma must be >= 0");
    ModelParams p = lin.params();
    p.sigma = sigma;
    const double h = rescaled_step(p, cfg);
    const double end = t_end.value_or(lin.path().t_end());

    Y0Path path;
    path.tag = NoiseTag{cfg.seed, cfg.trial_index, h};
    path.t.push_back(0.0);
    path.y.push_back(0.0);

    RandomStream wiener(cfg.seed, cfg.trial_index, StreamId::Wiener);
    std::size_t used = 0;
    auto normal = [&]() {
        if (increments.empty()) return wiener.normal();
        if (used >= increments.size()) {
            throw PreconditionError("simulate_y0: supplied increment stream is too short");
        }
        return increments[used++];
    };
    detail::step_gaussian(lin, sigma, h, 0.0, 0.0, end, normal,
                          [&](double, double, double t, double y, double) {
                              path.t.push_back(t);
                              path.y.push_back(y);
                              return true;
                          });
    return path;
}

double Decomposition::remainder_bound(double D, double t) const {
    return M * D * D / A0 * (1.0 - std::exp(-A0 * t / epsilon));
}

std::optional<std::size_t> Decomposition::first_bound_violation(double D, double slack) const {
    double running = 0.0;
    for (std::size_t k = 0; k < t.size(); ++k) {
        running = std::max(running, std::abs(y[k]));
        if (running > D) break;
        if (std::abs(y1[k]) > remainder_bound(D, t[k]) + slack) return k;
    }
    return std::nullopt;
}

Decomposition decompose(const TrajectoryPath& x_path, const DeterministicPath& x_det,
                        const LinearizationData& lin) {
    if (x_path.t.empty()) throw PreconditionError("decompose: empty trajectory");
    IntegratorConfig cfg;
    cfg.frame = Frame::Rescaled;
    cfg.dt = x_path.tag.step;
    cfg.seed = x_path.tag.seed;
    cfg.trial_index = x_path.tag.trial_index;
    const Y0Path y0 = simulate_y0(lin, lin.params().sigma, lin.params().epsilon, cfg,
                                  x_path.t.back());
    return decompose(x_path, x_det, lin, y0);
}

Decomposition decompose(const TrajectoryPath& x_path, const DeterministicPath& x_det,
                        const LinearizationData& lin, const Y0Path& y0) {
    if (!(x_path.tag == y0.tag)) {
        throw ContractError("decompose: x path and y0 path use different Wiener increments");
    }
    if (x_path.thin != 1) throw ContractError("decompose: x path must not be thinned");
    if (y0.t.size() < x_path.t.size()) {
        throw ContractError("decompose: y0 path is shorter than the x path");
    }
    Decomposition out;
    out.M = lin.M();
    out.A0 = lin.A0();
    out.epsilon = lin.params().epsilon;
    const std::size_t n = x_path.t.size();
    out.t = x_path.t;
    out.y.resize(n);
    out.y0.resize(n);
    out.y1.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        if (y0.t[k] != x_path.t[k]) {
            throw ContractError("decompose: x path and y0 path sample different times");
        }
        out.y[k] = x_path.x[k] - x_det.at(x_path.t[k]);
        out.y0[k] = y0.y[k];
        out.y1[k] = out.y[k] - out.y0[k];
    }
    return out;
}

}  // namespace chainbreak
