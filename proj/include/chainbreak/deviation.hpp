#pragma once

// Deviation process y = x - x_det and its linearisation
//
//   dy = (A(t) y + B(y, t)) dt/eps + sigma/sqrt(eps) dW,
//   A(t) = -U~''(x_det) - U~''(x_R - x_det).
//
// The chain domain becomes the corridor d_minus(t) < y < d_plus(t).

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "chainbreak/dynamics.hpp"

namespace chainbreak {

class LinearizationData {
  public:
    LinearizationData(ModelParams params, DeterministicPath path);

    const ModelParams& params() const { return params_; }
    const DeterministicPath& path() const { return path_; }
    /// A sampled on the path grid.
    const std::vector<double>& A() const { return a_grid_; }
    double A0() const { return a0_; }
    double A1() const { return a1_; }
    /// Inflated sup of |B(y,t)|/y^2 over the sampled corridor.
    double M() const { return m_; }
    /// Unscaled sup before the 10% margin.
    double M_raw() const { return m_raw_; }

    /// A(t) from the interpolated deterministic path.
    double A_at(double t) const;
    /// Nonlinear remainder B(y, t).
    double B(double y, double t) const;
    /// alpha(t, s) = integral of A over [s, t] (cumulative trapezoid).
    double alpha(double t, double s) const;
    double alpha(double t) const { return alpha(t, 0.0); }

  private:
    double prefix(double t) const;

    ModelParams params_;
    DeterministicPath path_;
    std::vector<double> a_grid_;
    std::vector<double> prefix_;
    double a0_ = 0.0;
    double a1_ = 0.0;
    double m_ = 0.0;
    double m_raw_ = 0.0;
};

/// Solves x_det with step dt and builds A, its bounds, alpha and M.
/// Throws ModelViolation if A(t) >= 0 anywhere on the grid.
LinearizationData build_linearization(const ModelParams& params, double dt);

class BoundaryCurves {
  public:
    BoundaryCurves(const ModelParams& params, const DeterministicPath& path);

    /// b - x_det(t).
    double d_plus(double t) const;
    /// x_R(t) - b - x_det(t).
    double d_minus(double t) const;
    double t_close() const { return t_close_; }
    /// First t with -d_minus(t) - D^2 = 0.
    double T_of_D(double D) const;

    /// d_plus >= -d_minus held on every grid node.
    bool dominance_holds() const { return dominance_; }
    /// d_plus was strictly decreasing along the grid.
    bool decreasing_holds() const { return decreasing_; }

  private:
    ModelParams params_;
    DeterministicPath path_;
    double t_close_;
    bool dominance_ = true;
    bool decreasing_ = true;
};

BoundaryCurves boundary_curves(const ModelParams& params, const DeterministicPath& path);

/// v solves eps v' = 2A v + 1 from v(0) = 0; xi solves the same ODE from
/// -1/(2A(0)), the bounded particular solution.
class VarianceData {
  public:
    explicit VarianceData(const LinearizationData& lin);

    const std::vector<double>& v() const { return v_; }
    const std::vector<double>& xi() const { return xi_; }
    double xi_minus() const { return xi_minus_; }
    double xi_plus() const { return xi_plus_; }
    double v_at(double t) const;
    double xi_at(double t) const;
    double step() const { return step_; }

    /// Empirical C in |xi - v| <= C exp(2 alpha(t)/eps), taken over nodes where
    /// the exponential is still above 1e-12.
    double decay_constant(const LinearizationData& lin) const;

  private:
    std::vector<double> v_;
    std::vector<double> xi_;
    double step_;
    double xi_minus_ = 0.0;
    double xi_plus_ = 0.0;
};

/// Sampled path of the Gaussian part y0 (rescaled time).
struct Y0Path {
    std::vector<double> t;
    std::vector<double> y;
    NoiseTag tag;
};

/// Euler-Maruyama path of dy0 = (A/eps) y0 dt + sigma/sqrt(eps) dW from
/// y0(0) = 0 up to t_end (defaults to t_close). Normals come from the Wiener
/// stream of (cfg.seed, cfg.trial_index), or from `increments` when given, so
/// a path with the same tag as a simulate_path result is coupled to it.
Y0Path simulate_y0(const LinearizationData& lin, double sigma, double epsilon,
                   const IntegratorConfig& cfg, std::optional<double> t_end = {},
                   std::span<const double> increments = {});

struct Decomposition {
    std::vector<double> t;
    std::vector<double> y;
    std::vector<double> y0;
    std::vector<double> y1;
    double M = 0.0;
    double A0 = 0.0;
    double epsilon = 0.0;

    /// (M D^2/A0)(1 - exp(-A0 t/eps)).
    double remainder_bound(double D, double t) const;
    /// First index where sup_{s<=t}|y_s| <= D but |y1_t| exceeds the
    /// remainder bound by more than `slack`.
    std::optional<std::size_t> first_bound_violation(double D, double slack) const;
};

/// y = x - x_det, y0 regenerated from the path's noise tag, y1 = y - y0.
Decomposition decompose(const TrajectoryPath& x_path, const DeterministicPath& x_det,
                        const LinearizationData& lin);

/// Same, with an explicit y0 path. Throws ContractError if the two paths do
/// not share their Wiener increments.
Decomposition decompose(const TrajectoryPath& x_path, const DeterministicPath& x_det,
                        const LinearizationData& lin, const Y0Path& y0);

}  // namespace chainbreak
