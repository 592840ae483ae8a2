#pragma once

// Monte Carlo experiments: break-side estimates in the fast and slow
// stretching regimes, and empirical checks of the corridor, confinement,
// hitting-window and reflection statements used to explain them.

#include <cstdint>
#include <string>
#include <vector>

#include "chainbreak/deviation.hpp"
#include "chainbreak/dynamics.hpp"
#include "chainbreak/estimate.hpp"

namespace chainbreak {

enum class Regime { Fast, Slow, Intermediate };

inline constexpr double kDefaultMargin = 3.0;

struct RegimeSpec {
    double sigma = 0.0;
    double epsilon = 0.0;
    Regime regime = Regime::Intermediate;
    double margin = kDefaultMargin;
    double fast_threshold = 0.0;     ///< sigma sqrt|ln sigma|
    double slow_threshold = 0.0;     ///< sigma / sqrt|ln sigma|
    double kramers_threshold = 0.0;  ///< sigma^(-2/3) exp(-sigma^(-2/3))
};

/// Fast: eps >= margin*sigma*sqrt|ln sigma|. Slow: eps <= sigma/(margin*sqrt|ln
/// sigma|) and eps >= margin*sigma^(-2/3)exp(-sigma^(-2/3)). Intermediate
/// otherwise. Requires 0 < sigma < 1 and eps > 0.
RegimeSpec classify_regime(double sigma, double epsilon, double margin = kDefaultMargin);

const char* to_string(Regime regime);
/// Marker attached to outputs in the intermediate regime.
inline constexpr const char* kIntermediateNote = "open problem: no theoretical prediction";

/// Fraction of n trials breaking on `side`; trial indices cfg.trial_index + i.
EstimateResult estimate_break_prob(const ModelParams& params, const IntegratorConfig& cfg,
                                   std::uint64_t n, Side side, unsigned threads = 0);

struct CorridorResult {
    EstimateResult empirical;
    double bound = 0.0;
    double H = 0.0;
    double t_end = 0.0;
};

/// Upper bound 2e*ceil(|alpha(t)|/eps * H^2/sigma^2) * exp(-H^2/(2 sigma^2)),
/// with the O(eps) correction dropped.
double corridor_bound(const LinearizationData& lin, double sigma, double H, double t_end);

/// P{ sup_{s <= t_end} |y0_s|/sqrt(xi(s)) >= H } by Monte Carlo with
/// bridge-corrected level crossings. Requires H^2 > 2 sigma^2.
CorridorResult corridor_experiment(const LinearizationData& lin, const VarianceData& var,
                                   double sigma, double epsilon, double H, double t_end,
                                   std::uint64_t n, const IntegratorConfig& cfg,
                                   unsigned threads = 0);

/// Several (H, t_end) pairs evaluated on one set of paths.
std::vector<CorridorResult> corridor_grid(const LinearizationData& lin, const VarianceData& var,
                                          double sigma, const std::vector<double>& H_values,
                                          const std::vector<double>& t_ends, std::uint64_t n,
                                          const IntegratorConfig& cfg, unsigned threads = 0);

/// P{ sup_{t <= t_close ^ tau} |y_t| >= D } from full simulations, with y
/// measured against x_det solved at `det_dt`.
EstimateResult sup_bound_experiment(const ModelParams& params, double D, std::uint64_t n,
                                    const IntegratorConfig& cfg, double det_dt,
                                    unsigned threads = 0);

struct TauLResult {
    std::vector<double> tau;        ///< per trial, in trial order
    std::vector<double> bin_edges;  ///< histogram over [0, T]
    std::vector<std::uint64_t> counts;
    EstimateResult in_window;
    EstimateResult upper_first;  ///< first touch on the upper envelope
    double window_low = 0.0;
    double window_high = 0.0;
    double T = 0.0;
    double D2_over_sigma = 0.0;
    std::uint64_t censored = 0;  ///< paths reaching T without touching
};

/// tau_L = first t with |y0_t| >= -d_minus(t) - D^2. Reports the fraction in
/// [b/a - 1 - sigma f+/a, b/a - 1 - sigma/(a f+)]. Throws PreconditionError if
/// -d_minus(0) - D^2 <= 0 or f+ <= 1.
TauLResult tau_L_experiment(const LinearizationData& lin, const BoundaryCurves& curves,
                            double sigma, double epsilon, double D, double f_plus,
                            std::uint64_t n, const IntegratorConfig& cfg, int bins = 40,
                            unsigned threads = 0);

struct ConditionalHitResult {
    EstimateResult hits_upper;       ///< y0 >= d_plus + D^2 within Delta
    EstimateResult crosses_zero;     ///< inf y0 < 0 within Delta
    double start = 0.0;              ///< -d_minus(t*) - D^2
};

/// y0 started at -d_minus(t*) - D^2 at time t*. Requires
/// [t*, t* + Delta] inside [0, T(D)].
ConditionalHitResult conditional_hit_experiment(const LinearizationData& lin,
                                                const BoundaryCurves& curves, double sigma,
                                                double epsilon, double D, double t_star,
                                                double Delta, std::uint64_t n,
                                                const IntegratorConfig& cfg,
                                                unsigned threads = 0);

struct ReflectionResult {
    double level = 0.0;
    EstimateResult sup_exceeds;       ///< P{ sup z >= h }
    EstimateResult terminal_exceeds;  ///< P{ z_end >= h }
    /// |p_sup - 2 p_end| divided by the combined standard error.
    double z_score = 0.0;
};

/// Paired check of P{sup z >= h} = 2 P{z_end >= h} for the Gaussian
/// martingale z_t = sigma/sqrt(eps) int_{t*}^t exp(-alpha(s, t*)/eps) dW_s.
/// Levels are given in units of the terminal standard deviation.
std::vector<ReflectionResult> reflection_experiment(const LinearizationData& lin, double sigma,
                                                    double t_star, double Delta,
                                                    const std::vector<double>& levels_in_sd,
                                                    std::uint64_t n,
                                                    const IntegratorConfig& cfg,
                                                    unsigned threads = 0);

/// Variance of z at t* + Delta, by quadrature.
double reflection_terminal_variance(const LinearizationData& lin, double sigma, double t_star,
                                    double Delta);

struct MartingaleResult {
    EstimateResult empirical;
    double bound = 0.0;  ///< 2 exp(-delta^2/(2 int phi^2))
};

/// P{ sup_{s<=t} |int_0^s phi dW| >= delta } for phi(u) = exp(rate u),
/// against the exponential maximal inequality.
MartingaleResult martingale_inequality_experiment(double rate, double t_end, double delta,
                                                  std::uint64_t n, std::uint64_t steps,
                                                  std::uint64_t seed, unsigned threads = 0);

struct VarianceCheck {
    double t = 0.0;
    double sample_variance = 0.0;
    double standard_error = 0.0;
    double predicted = 0.0;  ///< sigma^2 v(t)
};

/// Sample variance of y0 at the requested times over n paths.
std::vector<VarianceCheck> y0_variance_experiment(const LinearizationData& lin,
                                                  const VarianceData& var, double sigma,
                                                  const std::vector<double>& times,
                                                  std::uint64_t n, const IntegratorConfig& cfg,
                                                  unsigned threads = 0);

}  // namespace chainbreak
