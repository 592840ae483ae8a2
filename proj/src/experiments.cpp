#include "chainbreak/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "chainbreak/detail/gaussian.hpp"
#include "chainbreak/detail/integrate.hpp"
#include "chainbreak/errors.hpp"
#include "chainbreak/parallel.hpp"
#include "chainbreak/rng.hpp"

namespace chainbreak {

namespace {

constexpr double kNever = std::numeric_limits<double>::infinity();

// Step in rescaled time for Gaussian-process experiments.
double gaussian_step(const LinearizationData& lin, double sigma, const IntegratorConfig& cfg) {
    ModelParams p = lin.params();
    p.sigma = sigma;
    return rescaled_step(p, cfg);
}

void check_epsilon(const LinearizationData& lin, double epsilon) {
    const double eps = lin.params().epsilon;
    if (std::abs(epsilon - eps) > 1e-12 * eps) {
        throw PreconditionError("epsilon differs from the linearisation's");
    }
}

// Did a path with endpoint distances d0, d1 (> 0 inside) to a boundary touch
// it during a step? Grid hit when d1 <= 0; otherwise a bridge coin.
bool touched(double d0, double d1, double var, RandomStream& coins) {
    if (d1 <= 0.0) return true;
    if (!(var > 0.0)) return false;
    const double arg = 2.0 * d0 * d1 / var;
    if (arg >= detail::kBridgeCutoff) return false;
    return coins.uniform() < std::exp(-arg);
}

}  // namespace

RegimeSpec classify_regime(double sigma, double epsilon, double margin) {
    if (!(sigma > 0.0 && sigma < 1.0)) {
        throw PreconditionError("classify_regime needs 0 < sigma < 1 (|ln sigma| degenerates)");
    }
    if (!(epsilon > 0.0)) throw PreconditionError("classify_regime needs epsilon > 0");
    if (!(margin > 0.0)) throw PreconditionError("classify_regime needs a positive margin");
    RegimeSpec r;
    r.sigma = sigma;
    r.epsilon = epsilon;
    r.margin = margin;
    const double root_log = std::sqrt(std::abs(std::log(sigma)));
    const double s23 = std::pow(sigma, -2.0 / 3.0);
    r.fast_threshold = sigma * root_log;
    r.slow_threshold = sigma / root_log;
    r.kramers_threshold = s23 * std::exp(-s23);
    if (epsilon >= margin * r.fast_threshold) {
        r.regime = Regime::Fast;
    } else if (epsilon <= r.slow_threshold / margin && epsilon >= margin * r.kramers_threshold) {
        r.regime = Regime::Slow;
    } else {
        r.regime = Regime::Intermediate;
    }
    return r;
}

const char* to_string(Regime regime) {
    switch (regime) {
        case Regime::Fast:
            return "Fast";
        case Regime::Slow:
            return "Slow";
        default:
            return "Intermediate";
    }
}

EstimateResult estimate_break_prob(const ModelParams& params, const IntegratorConfig& cfg,
                                   std::uint64_t n, Side side, unsigned threads) {
    if (n == 0) throw PreconditionError("estimate_break_prob needs n >= 1");
    return side_estimate(run_trials(params, cfg, n, threads), side, cfg.seed);
}

double corridor_bound(const LinearizationData& lin, double sigma, double H, double t_end) {
    const double eps = lin.params().epsilon;
    const double ratio2 = H * H / (sigma * sigma);
    const double prefactor = 2.0 * std::numbers::e *
                             std::ceil(std::abs(lin.alpha(t_end)) / eps * ratio2);
    return prefactor * std::exp(-ratio2 / 2.0);
}

std::vector<CorridorResult> corridor_grid(const LinearizationData& lin, const VarianceData& var,
                                          double sigma, const std::vector<double>& H_values,
                                          const std::vector<double>& t_ends, std::uint64_t n,
                                          const IntegratorConfig& cfg, unsigned threads) {
    if (n == 0) throw PreconditionError("corridor experiment needs n >= 1");
    if (!(sigma > 0.0)) throw PreconditionError("corridor experiment needs sigma > 0");
    for (double H : H_values) {
        if (!(H * H > 2.0 * sigma * sigma)) {
            throw PreconditionError("corridor bound requires H^2 > 2 sigma^2");
        }
    }
    const double t_close = lin.path().t_end();
    double horizon = 0.0;
    for (double t : t_ends) {
        if (!(t >= 0.0 && t <= t_close)) {
            throw PreconditionError("corridor t_end must lie in [0, t_close]");
        }
        horizon = std::max(horizon, t);
    }
    const double h = gaussian_step(lin, sigma, cfg);
    const std::size_t nh = H_values.size();

    // first_exceed[trial * nh + k] = first time |y0|/sqrt(xi) reaches H_k
    std::vector<double> first_exceed(n * nh, kNever);
    parallel_for(n, threads, [&](std::size_t trial) {
        RandomStream wiener(cfg.seed, cfg.trial_index + trial, StreamId::Wiener);
        RandomStream coins(cfg.seed, cfg.trial_index + trial, StreamId::BridgeCoins);
        double* hit = &first_exceed[trial * nh];
        std::size_t open = nh;
        double env_prev = std::sqrt(var.xi_at(0.0));
        detail::step_gaussian(
            lin, sigma, h, 0.0, 0.0, horizon, [&] { return wiener.normal(); },
            [&](double, double y_prev, double t, double y, double step_var) {
                const double env = std::sqrt(var.xi_at(t));
                for (std::size_t k = 0; k < nh; ++k) {
                    if (hit[k] != kNever) continue;
                    const double H = H_values[k];
                    const bool up = touched(H * env_prev - y_prev, H * env - y, step_var, coins);
                    const bool dn = touched(H * env_prev + y_prev, H * env + y, step_var, coins);
                    if (up || dn) {
                        hit[k] = t;
                        --open;
                    }
                }
                env_prev = env;
                return open > 0;
            });
    });

    std::vector<CorridorResult> out;
    for (std::size_t k = 0; k < nh; ++k) {
        for (double t_end : t_ends) {
            std::uint64_t count = 0;
            for (std::size_t trial = 0; trial < n; ++trial) {
                count += first_exceed[trial * nh + k] <= t_end ? 1 : 0;
            }
            CorridorResult r;
            r.empirical = make_estimate(count, n, 0, cfg.seed);
            r.bound = corridor_bound(lin, sigma, H_values[k], t_end);
            r.H = H_values[k];
            r.t_end = t_end;
            out.push_back(r);
        }
    }
    return out;
}

CorridorResult corridor_experiment(const LinearizationData& lin, const VarianceData& var,
                                   double sigma, double epsilon, double H, double t_end,
                                   std::uint64_t n, const IntegratorConfig& cfg,
                                   unsigned threads) {
    check_epsilon(lin, epsilon);
    return corridor_grid(lin, var, sigma, {H}, {t_end}, n, cfg, threads).front();
}

EstimateResult sup_bound_experiment(const ModelParams& params, double D, std::uint64_t n,
                                    const IntegratorConfig& cfg, double det_dt,
                                    unsigned threads) {
    if (!(D > 0.0)) throw PreconditionError("sup_bound_experiment needs D > 0");
    if (n == 0) throw PreconditionError("sup_bound_experiment needs n >= 1");
    params.validate();
    const DeterministicPath det = solve_deterministic(params, det_dt);
    std::vector<char> exceeded(n, 0);
    std::vector<char> capped(n, 0);
    parallel_for(n, threads, [&](std::size_t i) {
        IntegratorConfig local = cfg;
        local.trial_index = cfg.trial_index + i;
        double sup = 0.0;
        const BreakRecord rec = detail::integrate(params, local, [&](double t, double x) {
            sup = std::max(sup, std::abs(x - det.at(t)));
        });
        sup = std::max(sup, std::abs(rec.x_at_exit - det.at(rec.tau)));
        exceeded[i] = sup >= D ? 1 : 0;
        capped[i] = rec.capped ? 1 : 0;
    });
    std::uint64_t hits = 0;
    std::uint64_t caps = 0;
    for (std::size_t i = 0; i < n; ++i) {
        hits += exceeded[i];
        caps += capped[i];
    }
    return make_estimate(hits, n, caps, cfg.seed);
}

TauLResult tau_L_experiment(const LinearizationData& lin, const BoundaryCurves& curves,
                            double sigma, double epsilon, double D, double f_plus,
                            std::uint64_t n, const IntegratorConfig& cfg, int bins,
                            unsigned threads) {
    check_epsilon(lin, epsilon);
    if (n == 0) throw PreconditionError("tau_L experiment needs n >= 1");
    if (!(f_plus > 1.0)) throw PreconditionError("tau_L experiment needs f_plus > 1");
    if (!(sigma > 0.0)) throw PreconditionError("tau_L experiment needs sigma > 0");
    if (bins < 1) throw PreconditionError("tau_L histogram needs at least one bin");
    const double D2 = D * D;
    if (!(-curves.d_minus(0.0) - D2 > 0.0)) {
        throw PreconditionError("degenerate domain: -d_minus(0) - D^2 <= 0");
    }
    const double a = lin.params().a();
    const double T = curves.T_of_D(D);
    const double h = gaussian_step(lin, sigma, cfg);

    TauLResult out;
    out.T = T;
    out.D2_over_sigma = D2 / sigma;
    out.window_low = curves.t_close() - sigma * f_plus / a;
    out.window_high = curves.t_close() - sigma / (a * f_plus);
    out.tau.assign(n, T);
    std::vector<signed char> which(n, 0);  // +1 upper, -1 lower, 0 censored

    parallel_for(n, threads, [&](std::size_t trial) {
        RandomStream wiener(cfg.seed, cfg.trial_index + trial, StreamId::Wiener);
        RandomStream coins(cfg.seed, cfg.trial_index + trial, StreamId::BridgeCoins);
        auto envelope = [&](double t) { return -curves.d_minus(t) - D2; };
        double env_prev = envelope(0.0);
        detail::step_gaussian(
            lin, sigma, h, 0.0, 0.0, T, [&] { return wiener.normal(); },
            [&](double t0, double y0, double t1, double y1, double step_var) {
                const double env = envelope(t1);
                const double up0 = env_prev - y0;
                const double up1 = env - y1;
                const double dn0 = env_prev + y0;
                const double dn1 = env + y1;
                if (up1 <= 0.0 || dn1 <= 0.0) {
                    const double th_up = up1 <= 0.0 ? up0 / (up0 - up1) : kNever;
                    const double th_dn = dn1 <= 0.0 ? dn0 / (dn0 - dn1) : kNever;
                    const double theta = std::clamp(std::min(th_up, th_dn), 0.0, 1.0);
                    out.tau[trial] = t0 + theta * (t1 - t0);
                    which[trial] = th_up <= th_dn ? 1 : -1;
                    return false;
                }
                const bool up = touched(up0, up1, step_var, coins);
                const bool dn = touched(dn0, dn1, step_var, coins);
                if (up || dn) {
                    out.tau[trial] = 0.5 * (t0 + t1);
                    which[trial] = up ? 1 : -1;
                    return false;
                }
                env_prev = env;
                return true;
            });
    });

    std::uint64_t in_window = 0;
    std::uint64_t touches = 0;
    std::uint64_t upper = 0;
    out.bin_edges.resize(bins + 1);
    for (int k = 0; k <= bins; ++k) out.bin_edges[k] = T * k / bins;
    out.counts.assign(bins, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const double tau = out.tau[i];
        if (which[i] == 0) {
            ++out.censored;
        } else {
            ++touches;
            upper += which[i] > 0 ? 1 : 0;
        }
        if (which[i] != 0 && tau >= out.window_low && tau <= out.window_high) ++in_window;
        const auto bin = std::min<std::size_t>(
            bins - 1, static_cast<std::size_t>(std::max(0.0, tau / T * bins)));
        ++out.counts[bin];
    }
    out.in_window = make_estimate(in_window, n, 0, cfg.seed);
    out.upper_first = make_estimate(upper, std::max<std::uint64_t>(touches, 1), 0, cfg.seed);
    if (touches == 0) out.upper_first.warnings.push_back("no path touched the envelope");
    return out;
}

ConditionalHitResult conditional_hit_experiment(const LinearizationData& lin,
                                                const BoundaryCurves& curves, double sigma,
                                                double epsilon, double D, double t_star,
                                                double Delta, std::uint64_t n,
                                                const IntegratorConfig& cfg, unsigned threads) {
    check_epsilon(lin, epsilon);
    if (n == 0) throw PreconditionError("conditional hit experiment needs n >= 1");
    const double D2 = D * D;
    const double T = curves.T_of_D(D);
    if (!(t_star >= 0.0 && Delta >= 0.0 && t_star + Delta <= T)) {
        throw PreconditionError(
            "interval [t*, t* + Delta] must lie within [0, T(D)], where the start level "
            "-d_minus(t) - D^2 is still positive; T(D) = " +
            std::to_string(T));
    }
    const double h = gaussian_step(lin, sigma, cfg);

    ConditionalHitResult out;
    out.start = -curves.d_minus(t_star) - D2;
    std::vector<char> hit_upper(n, 0);
    std::vector<char> hit_zero(n, 0);
    parallel_for(n, threads, [&](std::size_t trial) {
        if (Delta == 0.0) return;
        RandomStream wiener(cfg.seed, cfg.trial_index + trial, StreamId::Wiener);
        RandomStream coins(cfg.seed, cfg.trial_index + trial, StreamId::BridgeCoins);
        auto level = [&](double t) { return curves.d_plus(t) + D2; };
        double lvl_prev = level(t_star);
        detail::step_gaussian(
            lin, sigma, h, t_star, out.start, t_star + Delta, [&] { return wiener.normal(); },
            [&](double, double y0, double t1, double y1, double step_var) {
                const double lvl = level(t1);
                if (!hit_upper[trial] && touched(lvl_prev - y0, lvl - y1, step_var, coins)) {
                    hit_upper[trial] = 1;
                }
                // inf y0 < 0: strict, so a grid value of exactly 0 does not count
                if (!hit_zero[trial]) {
                    if (y1 < 0.0) {
                        hit_zero[trial] = 1;
                    } else if (y1 > 0.0 && touched(y0, y1, step_var, coins)) {
                        hit_zero[trial] = 1;
                    }
                }
                lvl_prev = lvl;
                return !(hit_upper[trial] && hit_zero[trial]);
            });
    });
    std::uint64_t up = 0;
    std::uint64_t zero = 0;
    for (std::size_t i = 0; i < n; ++i) {
        up += hit_upper[i];
        zero += hit_zero[i];
    }
    out.hits_upper = make_estimate(up, n, 0, cfg.seed);
    out.crosses_zero = make_estimate(zero, n, 0, cfg.seed);
    return out;
}

double reflection_terminal_variance(const LinearizationData& lin, double sigma, double t_star,
                                    double Delta) {
    const double eps = lin.params().epsilon;
    constexpr int m = 20000;
    double acc = 0.0;
    for (int k = 0; k <= m; ++k) {
        const double s = t_star + Delta * k / m;
        const double w = (k == 0 || k == m) ? 0.5 : 1.0;
        acc += w * std::exp(-2.0 * lin.alpha(s, t_star) / eps);
    }
    return sigma * sigma / eps * acc * Delta / m;
}

std::vector<ReflectionResult> reflection_experiment(const LinearizationData& lin, double sigma,
                                                    double t_star, double Delta,
                                                    const std::vector<double>& levels_in_sd,
                                                    std::uint64_t n,
                                                    const IntegratorConfig& cfg,
                                                    unsigned threads) {
    if (n == 0) throw PreconditionError("reflection experiment needs n >= 1");
    if (!(sigma > 0.0 && Delta > 0.0)) {
        throw PreconditionError("reflection experiment needs sigma > 0 and Delta > 0");
    }
    if (!(t_star >= 0.0 && t_star + Delta <= lin.path().t_end())) {
        throw PreconditionError("reflection interval must lie within [0, t_close]");
    }
    const double eps = lin.params().epsilon;
    const double h = gaussian_step(lin, sigma, cfg);
    const double sd_end = std::sqrt(reflection_terminal_variance(lin, sigma, t_star, Delta));
    const std::size_t nl = levels_in_sd.size();
    std::vector<double> levels(nl);
    for (std::size_t k = 0; k < nl; ++k) levels[k] = levels_in_sd[k] * sd_end;

    std::vector<char> sup_hit(n * nl, 0);
    std::vector<char> end_hit(n * nl, 0);
    parallel_for(n, threads, [&](std::size_t trial) {
        RandomStream wiener(cfg.seed, cfg.trial_index + trial, StreamId::Wiener);
        RandomStream coins(cfg.seed, cfg.trial_index + trial, StreamId::BridgeCoins);
        double z = 0.0;
        double t = t_star;
        const double t_end = t_star + Delta;
        std::uint64_t k = 0;
        while (t < t_end) {
            const double t_grid = t_star + static_cast<double>(k + 1) * h;
            const double t_next = t_grid >= t_end ? t_end : t_grid;
            const double var =
                sigma * sigma / eps * std::exp(-2.0 * lin.alpha(t, t_star) / eps) * (t_next - t);
            const double z_next = z + std::sqrt(var) * wiener.normal();
            for (std::size_t l = 0; l < nl; ++l) {
                char& hit = sup_hit[trial * nl + l];
                if (!hit && touched(levels[l] - z, levels[l] - z_next, var, coins)) hit = 1;
            }
            z = z_next;
            t = t_next;
            ++k;
        }
        for (std::size_t l = 0; l < nl; ++l) end_hit[trial * nl + l] = z >= levels[l] ? 1 : 0;
    });

    std::vector<ReflectionResult> out;
    for (std::size_t l = 0; l < nl; ++l) {
        std::uint64_t s = 0;
        std::uint64_t e = 0;
        for (std::size_t i = 0; i < n; ++i) {
            s += sup_hit[i * nl + l];
            e += end_hit[i * nl + l];
        }
        ReflectionResult r;
        r.level = levels[l];
        r.sup_exceeds = make_estimate(s, n, 0, cfg.seed);
        r.terminal_exceeds = make_estimate(e, n, 0, cfg.seed);
        const double se = std::sqrt(std::pow(r.sup_exceeds.standard_error(), 2) +
                                    4.0 * std::pow(r.terminal_exceeds.standard_error(), 2));
        const double diff = r.sup_exceeds.p_hat - 2.0 * r.terminal_exceeds.p_hat;
        r.z_score = se > 0.0 ? std::abs(diff) / se : (diff == 0.0 ? 0.0 : kNever);
        out.push_back(r);
    }
    return out;
}

MartingaleResult martingale_inequality_experiment(double rate, double t_end, double delta,
                                                  std::uint64_t n, std::uint64_t steps,
                                                  std::uint64_t seed, unsigned threads) {
    if (n == 0 || steps == 0) throw PreconditionError("martingale experiment needs n, steps >= 1");
    if (!(t_end > 0.0 && delta > 0.0)) {
        throw PreconditionError("martingale experiment needs t_end > 0 and delta > 0");
    }
    // Exact variance of each increment int phi^2 over the step.
    auto phi2_integral = [rate](double lo, double hi) {
        if (rate == 0.0) return hi - lo;
        return (std::exp(2.0 * rate * hi) - std::exp(2.0 * rate * lo)) / (2.0 * rate);
    };
    const double h = t_end / static_cast<double>(steps);
    std::vector<char> hit(n, 0);
    parallel_for(n, threads, [&](std::size_t trial) {
        RandomStream wiener(seed, trial, StreamId::Wiener);
        RandomStream coins(seed, trial, StreamId::BridgeCoins);
        double m = 0.0;
        for (std::uint64_t k = 0; k < steps; ++k) {
            const double var = phi2_integral(h * k, h * (k + 1));
            const double m_next = m + std::sqrt(var) * wiener.normal();
            if (touched(delta - m, delta - m_next, var, coins) ||
                touched(delta + m, delta + m_next, var, coins)) {
                hit[trial] = 1;
                break;
            }
            m = m_next;
        }
    });
    std::uint64_t count = 0;
    for (char c : hit) count += c;
    MartingaleResult out;
    out.empirical = make_estimate(count, n, 0, seed);
    out.bound = 2.0 * std::exp(-delta * delta / (2.0 * phi2_integral(0.0, t_end)));
    return out;
}

std::vector<VarianceCheck> y0_variance_experiment(const LinearizationData& lin,
                                                  const VarianceData& var, double sigma,
                                                  const std::vector<double>& times,
                                                  std::uint64_t n, const IntegratorConfig& cfg,
                                                  unsigned threads) {
    if (n < 2) throw PreconditionError("variance experiment needs n >= 2");
    if (!std::is_sorted(times.begin(), times.end()) || times.empty() || times.front() <= 0.0 ||
        times.back() > lin.path().t_end()) {
        throw PreconditionError("variance times must be increasing within (0, t_close]");
    }
    const double h = gaussian_step(lin, sigma, cfg);
    const std::size_t nt = times.size();
    std::vector<double> samples(n * nt);
    parallel_for(n, threads, [&](std::size_t trial) {
        RandomStream wiener(cfg.seed, cfg.trial_index + trial, StreamId::Wiener);
        double t = 0.0;
        double y = 0.0;
        for (std::size_t k = 0; k < nt; ++k) {
            detail::step_gaussian(lin, sigma, h, t, y, times[k], [&] { return wiener.normal(); },
                                  [&](double, double, double, double y1, double) {
                                      y = y1;
                                      return true;
                                  });
            t = times[k];
            samples[trial * nt + k] = y;
        }
    });
    std::vector<VarianceCheck> out;
    const double nn = static_cast<double>(n);
    for (std::size_t k = 0; k < nt; ++k) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += samples[i * nt + k];
        mean /= nn;
        double m2 = 0.0;
        double m4 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = samples[i * nt + k] - mean;
            m2 += d * d;
            m4 += d * d * d * d;
        }
        const double s2 = m2 / (nn - 1.0);
        const double pop2 = m2 / nn;
        VarianceCheck c;
        c.t = times[k];
        c.sample_variance = s2;
        c.standard_error = std::sqrt(std::max(0.0, m4 / nn - pop2 * pop2) / nn);
        c.predicted = sigma * sigma * var.v_at(times[k]);
        out.push_back(c);
    }
    return out;
}

}  // namespace chainbreak
