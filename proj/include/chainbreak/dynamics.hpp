#pragma once

// Middle-particle dynamics: the stretched three-particle chain
//
//   dx = (-U~'(x) + U~'(x_R(t) - x)) dt/eps + sigma/sqrt(eps) dW,   x(0) = a,
//
// in rescaled time t = eps*s, with x_R(t) = 2a(1 + p(t)). The chain is
// unbroken while x stays inside (x_R(t) - b, b); it breaks on the left when
// x reaches b and on the right when x reaches x_R(t) - b.

#include <cstdint>
#include <vector>

#include "chainbreak/estimate.hpp"
#include "chainbreak/potential.hpp"
#include "chainbreak/pull.hpp"

namespace chainbreak {

enum class Frame { Physical, Rescaled };
enum class Scheme { ExplicitEM, SemiImplicitEM };
enum class Crossing { Grid, LinearInterp, BridgeCorrected };
enum class Side { Left, Right };
/// Which potential the drift uses. Inside the unbroken region both agree.
enum class DriftPotential { Extended, Raw };

struct ModelParams {
    ExtendedPotential potential;
    double sigma = 0.0;
    double epsilon = 0.0;
    PullSchedule pull = PullSchedule::linear();
    DriftPotential drift_potential = DriftPotential::Extended;

    double a() const { return potential.a(); }
    double b() const { return potential.b(); }
    /// Rescaled time at which the two domain edges meet: p(t_close) = b/a - 1.
    double t_close() const;
    /// Throws ConfigError unless eps > 0, sigma >= 0 and p is increasing.
    void validate() const;

    double force_derivative(double x, double t) const;
    double right_end(double t) const { return 2.0 * a() * (1.0 + pull(t)); }
    double midpoint(double t) const { return a() * (1.0 + pull(t)); }
    /// -dH/dx at rescaled time t (no 1/eps factor).
    double force(double x, double t) const {
        const double gap = right_end(t) - x;
        if (drift_potential == DriftPotential::Raw) {
            return -potential.base().d1(x) + potential.base().d1(gap);
        }
        return -potential.d1(x) + potential.d1(gap);
    }
};

struct IntegratorConfig {
    Frame frame = Frame::Physical;
    double dt = 0.0;  ///< step in the chosen frame; 0 selects default_dt
    Scheme scheme = Scheme::ExplicitEM;
    Crossing crossing = Crossing::BridgeCorrected;
    std::uint64_t seed = 0;
    std::uint64_t trial_index = 0;
};

struct BreakRecord {
    double tau = 0.0;  ///< rescaled exit time
    Side side = Side::Right;
    double x_at_exit = 0.0;
    std::uint64_t steps = 0;
    bool capped = false;  ///< exit only resolved by domain closure

    bool operator==(const BreakRecord&) const = default;
};

/// 2a(1 + p(t)).
double right_endpoint(const ModelParams& params, double t);

/// Rescaled frame: (-U~'(x) + U~'(x_R(t) - x))/eps. Physical frame: the same
/// force without 1/eps. `t` is rescaled time in both frames.
double drift(const ModelParams& params, double x, double t, Frame frame);

/// Upper estimate of -A(t) = U~''(x) + U~''(x_R - x) over the unbroken region.
double a1_estimate(const ModelParams& params);

/// Physical-frame default min(0.01, 0.1/A1, sigma^2/4 when sigma > 0), converted
/// to the requested frame.
double default_dt(const ModelParams& params, Frame frame);

/// The integrator's step in rescaled time after defaulting.
double rescaled_step(const ModelParams& params, const IntegratorConfig& cfg);

/// Deterministic quasi-static path on a uniform grid over [0, t_close].
///
/// Nodes carry the ODE right-hand side as well, so evaluation between nodes
/// uses cubic Hermite interpolation.
class DeterministicPath {
  public:
    DeterministicPath(std::vector<double> x, std::vector<double> slope, double step);

    std::size_t size() const { return x_.size(); }
    double step() const { return step_; }
    double t_end() const { return step_ * static_cast<double>(x_.size() - 1); }
    double time(std::size_t i) const { return step_ * static_cast<double>(i); }
    const std::vector<double>& values() const { return x_; }
    const std::vector<double>& slopes() const { return slope_; }

    double at(double t) const;
    double slope_at(double t) const;

  private:
    std::vector<double> x_;
    std::vector<double> slope_;
    double step_;
};

/// Classical RK4 on the rescaled ODE with step doubling as a local error
/// monitor. The grid uses t_close/ceil(t_close/dt) so it ends on t_close.
/// Throws IntegrationError when the step is too large for the stiffness
/// 1/eps or the path leaves (0, x_R(t)).
DeterministicPath solve_deterministic(const ModelParams& params, double dt);

/// First exit of one Euler-Maruyama path from the chain domain.
/// Identical (params, cfg) give a bit-identical record.
BreakRecord simulate_trajectory(const ModelParams& params, const IntegratorConfig& cfg);

/// Identifies a Wiener increment sequence: two paths built from equal tags
/// consumed the same normals on the same rescaled grid.
struct NoiseTag {
    std::uint64_t seed = 0;
    std::uint64_t trial_index = 0;
    double step = 0.0;

    bool operator==(const NoiseTag&) const = default;
};

/// A recorded path: in-domain samples every `thin` steps (rescaled time).
struct TrajectoryPath {
    std::vector<double> t;
    std::vector<double> x;
    NoiseTag tag;
    std::size_t thin = 1;
    BreakRecord record;
};

TrajectoryPath simulate_path(const ModelParams& params, const IntegratorConfig& cfg,
                             std::size_t thin = 1);

/// n independent trials with trial indices cfg.trial_index + i.
std::vector<BreakRecord> run_trials(const ModelParams& params, const IntegratorConfig& cfg,
                                    std::uint64_t n, unsigned threads = 0);

EstimateResult side_estimate(const std::vector<BreakRecord>& records, Side side,
                             std::uint64_t seed);

struct FrameComparison {
    EstimateResult physical;
    EstimateResult rescaled;
    /// Wilson intervals at 99% overlap.
    bool consistent = false;
};

/// Left-break probability under both frames.
FrameComparison equivalence_check(const ModelParams& params, const IntegratorConfig& physical,
                                  const IntegratorConfig& rescaled, std::uint64_t n,
                                  unsigned threads = 0);

const char* to_string(Side side);
const char* to_string(Frame frame);
const char* to_string(Scheme scheme);
const char* to_string(Crossing crossing);

}  // namespace chainbreak
