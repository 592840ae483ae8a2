#include <cmath>
#include <vector>

#include "chainbreak/errors.hpp"
#include "chainbreak/experiments.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace chainbreak;

namespace {

ModelParams quadratic_model(double sigma, double eps) {
    ModelParams m{extend(Potential::quadratic(1.0, -4.0, 3.0, 2.0, 3.0))};
    m.sigma = sigma;
    m.epsilon = eps;
    return m;
}

IntegratorConfig rescaled(double dt, std::uint64_t seed = 0) {
    IntegratorConfig cfg;
    cfg.frame = Frame::Rescaled;
    cfg.dt = dt;
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST_CASE("regime classification examples") {
    const auto fast = classify_regime(0.01, 0.25);
    CHECK(fast.regime == Regime::Fast);
    CHECK(fast.fast_threshold == doctest::Approx(oracle::fast_threshold(0.01)));
    CHECK(fast.fast_threshold == doctest::Approx(0.0215).epsilon(1e-2));
    const auto slow = classify_regime(0.02, 5e-4);
    CHECK(slow.regime == Regime::Slow);
    CHECK(slow.slow_threshold == doctest::Approx(oracle::slow_threshold(0.02)));
    CHECK(slow.slow_threshold == doctest::Approx(0.0101).epsilon(1e-2));
    CHECK(slow.kramers_threshold == doctest::Approx(oracle::kramers_threshold(0.02)));
    CHECK(slow.kramers_threshold == doctest::Approx(1.7e-5).epsilon(3e-2));
    for (double margin : {1.0, 2.0, 3.0, 5.0}) {
        CHECK(classify_regime(0.05, 0.05, margin).regime == Regime::Intermediate);
    }
    CHECK(classify_regime(0.02, 1e-9).regime == Regime::Intermediate);  // below Kramers
    CHECK(classify_regime(0.01, 0.05, 3.0).regime == Regime::Intermediate);
    CHECK(classify_regime(0.01, 0.1, 3.0).regime == Regime::Fast);
    CHECK(classify_regime(0.01, 0.1, 3.0).margin == 3.0);
    CHECK(classify_regime(0.01, 0.1, 10.0).regime == Regime::Intermediate);
    CHECK_THROWS_AS(classify_regime(1.0, 0.1), PreconditionError);
    CHECK_THROWS_AS(classify_regime(0.1, 0.0), PreconditionError);
}

TEST_CASE("estimates carry Wilson intervals") {
    for (std::uint64_t n : {std::uint64_t{1}, std::uint64_t{10}, std::uint64_t{100}, std::uint64_t{10000}}) {
        for (std::uint64_t s : {std::uint64_t{0}, std::uint64_t{1}, n / 2, n}) {
            if (s > n) continue;
            const auto e = make_estimate(s, n);
            REQUIRE(0.0 <= e.ci_low);
            REQUIRE(e.ci_low <= e.p_hat);
            REQUIRE(e.p_hat <= e.ci_high);
            REQUIRE(e.ci_high <= 1.0);
        }
    }
    const double w1 = make_estimate(50, 100).ci_high - make_estimate(50, 100).ci_low;
    const double w2 = make_estimate(5000, 10000).ci_high - make_estimate(5000, 10000).ci_low;
    CHECK(w1 / w2 == doctest::Approx(10.0).epsilon(0.02));
    // Wilson at p = 1/2, n = 100
    CHECK(make_estimate(50, 100).ci_low == doctest::Approx(0.40383).epsilon(1e-4));
    CHECK(make_estimate(0, 100, 2).warnings.size() == 1);
    CHECK(make_estimate(0, 100, 1).warnings.empty());
    CHECK_THROWS_AS(make_estimate(0, 0), PreconditionError);
}

TEST_CASE("noiseless chains never break left") {
    IntegratorConfig cfg;
    const auto e = estimate_break_prob(quadratic_model(0.0, 0.25), cfg, 10, Side::Left);
    CHECK(e.p_hat == 0.0);
    CHECK(e.successes == 0);
    CHECK_THROWS_AS(estimate_break_prob(quadratic_model(0.0, 0.25), cfg, 0, Side::Left),
                    PreconditionError);
}

TEST_CASE("estimates do not depend on the worker count") {
    const auto m = quadratic_model(0.05, 0.02);
    IntegratorConfig cfg;
    cfg.dt = 2e-3;
    cfg.seed = 17;
    const auto one = estimate_break_prob(m, cfg, 150, Side::Left, 1);
    const auto many = estimate_break_prob(m, cfg, 150, Side::Left, 5);
    CHECK(one.successes == many.successes);
    CHECK(one.p_hat == many.p_hat);
}

TEST_CASE("left-break probability does not grow with stretching speed") {
    const double sigma = 0.05;
    std::vector<EstimateResult> est;
    for (double eps : {0.005, 0.01, 0.02, 0.05, 0.1}) {
        IntegratorConfig cfg;
        cfg.dt = 2e-3;
        cfg.seed = 3;
        est.push_back(estimate_break_prob(quadratic_model(sigma, eps), cfg, 300, Side::Left));
    }
    for (std::size_t i = 0; i < est.size(); ++i) {
        for (std::size_t j = i + 1; j < est.size(); ++j) {
            CHECK(est[j].ci_low <= est[i].ci_high);
        }
    }
    CHECK(est.front().p_hat > est.back().p_hat);
}

TEST_CASE("corridor bound: preconditions, dominance, unreachable levels") {
    const double sigma = 0.01;
    const double eps = 0.25;
    const auto lin = build_linearization(quadratic_model(sigma, eps), 1e-3);
    const VarianceData var(lin);
    const auto cfg = rescaled(5e-4, 2);
    CHECK_THROWS_AS(corridor_experiment(lin, var, sigma, eps, sigma, 0.25, 10, cfg),
                    PreconditionError);
    CHECK_THROWS_AS(corridor_experiment(lin, var, sigma, eps, 3 * sigma, 0.6, 10, cfg),
                    PreconditionError);
    const auto far = corridor_experiment(lin, var, sigma, eps, 1.0, 0.5, 200, cfg);
    CHECK(far.empirical.successes == 0);
    const auto rows =
        corridor_grid(lin, var, sigma, {3 * sigma, 5 * sigma}, {0.1, 0.4}, 1000, cfg);
    REQUIRE(rows.size() == 4);
    for (const auto& r : rows) CHECK(r.empirical.p_hat <= r.bound);
    // more time, more exceedances
    CHECK(rows[0].empirical.successes <= rows[1].empirical.successes);
    // explicit prefactor: 2e * ceil(|alpha| / eps * 25) * exp(-12.5)
    const double expected = 2 * std::exp(1.0) * std::ceil(4 * 0.4 / eps * 25) * std::exp(-12.5);
    // ceil() may round up once more through alpha's quadrature error
    CHECK(corridor_bound(lin, sigma, 5 * sigma, 0.4) == doctest::Approx(expected).epsilon(0.01));
}

TEST_CASE("corridor exceedance near its Gaussian value") {
    // For t_end much larger than eps, y0 / sqrt(xi) is nearly stationary; a
    // level of 2 sigma is crossed often. Sanity: one-point marginal bound.
    const double sigma = 0.01;
    const double eps = 0.25;
    const auto lin = build_linearization(quadratic_model(sigma, eps), 1e-3);
    const VarianceData var(lin);
    const auto r = corridor_grid(lin, var, sigma, {1.5 * sigma}, {0.4}, 400, rescaled(5e-4, 9));
    CHECK(r[0].empirical.p_hat >= 2 * oracle::normal_tail(1.5) * 0.8);
}

TEST_CASE("exponential martingale inequality") {
    for (double rate : {0.0, 1.0, -2.0}) {
        const double t = 1.0;
        const double var = rate == 0.0 ? t : (std::exp(2 * rate * t) - 1) / (2 * rate);
        for (double k : {1.5, 2.0, 3.0}) {
            const auto r = martingale_inequality_experiment(rate, t, k * std::sqrt(var), 2000, 200, 4);
            CHECK(r.bound == doctest::Approx(2 * std::exp(-k * k / 2)));
            CHECK(r.empirical.p_hat <= r.bound);
        }
    }
    CHECK_THROWS_AS(martingale_inequality_experiment(1.0, 1.0, 1.0, 0, 10, 0), PreconditionError);
}

TEST_CASE("reflection identity for the transformed martingale") {
    const double sigma = 0.02;
    const double eps = 5e-3;
    const auto lin = build_linearization(quadratic_model(sigma, eps), 1e-4);
    const double Delta = eps / 4;
    // constant A = -4: Var z = sigma^2 (e^{8 Delta/eps} - 1)/8
    const double v = reflection_terminal_variance(lin, sigma, 0.3, Delta);
    CHECK(v == doctest::Approx(sigma * sigma * (std::exp(8 * Delta / eps) - 1) / 8).epsilon(1e-6));
    const auto rows = reflection_experiment(lin, sigma, 0.3, Delta, {0.5, 1.0, 2.0}, 4000,
                                            rescaled(Delta / 200, 6));
    for (const auto& r : rows) {
        CHECK(r.z_score < 3.5);
        CHECK(r.terminal_exceeds.p_hat ==
              doctest::Approx(oracle::normal_tail(r.level / std::sqrt(v))).epsilon(0.2));
    }
}

TEST_CASE("conditional hits: empty interval and preconditions") {
    const double sigma = 0.02;
    const double eps = 5e-4;
    const auto m = quadratic_model(sigma, eps);
    const auto lin = build_linearization(m, 1e-5);
    const BoundaryCurves curves(m, lin.path());
    const auto cfg = rescaled(1e-7);
    const double T = curves.T_of_D(0.0);
    const auto zero = conditional_hit_experiment(lin, curves, sigma, eps, 0.0, 0.3, 0.0, 50, cfg);
    CHECK(zero.hits_upper.p_hat == 0.0);
    CHECK(zero.crosses_zero.p_hat == 0.0);
    CHECK(zero.start == doctest::Approx(-curves.d_minus(0.3)));
    CHECK_THROWS_AS(conditional_hit_experiment(lin, curves, sigma, eps, 0.0, T, 1e-3, 5, cfg),
                    PreconditionError);
    CHECK_THROWS_AS(conditional_hit_experiment(lin, curves, sigma, eps, 0.0, -0.1, 0.01, 5, cfg),
                    PreconditionError);
    // close to T the start sits within a few sd of zero
    const auto late = conditional_hit_experiment(lin, curves, sigma, eps, 0.0, T - 2e-3, 1e-3,
                                                 200, rescaled(2e-6, 1));
    CHECK(late.crosses_zero.p_hat > 0.5);
}

TEST_CASE("conditional hits in the slow regime") {
    const double sigma = 0.02;
    const double eps = 5e-5;
    const auto m = quadratic_model(sigma, eps);
    const auto lin = build_linearization(m, 1e-6);
    const BoundaryCurves curves(m, lin.path());
    const double t_star = 0.5 - sigma * std::abs(std::log(sigma)) / 2;
    const double Delta = 1e-6;
    const auto r = conditional_hit_experiment(lin, curves, sigma, eps, 0.0, t_star, Delta, 400,
                                              rescaled(Delta / 200, 4));
    CHECK(r.start > 0.0);
    CHECK(r.hits_upper.p_hat > 0.8);
    CHECK(r.crosses_zero.p_hat < 0.05);
}

TEST_CASE("tau_L: preconditions, symmetry and window") {
    const double sigma = 0.02;
    const double eps = 5e-4;
    const auto m = quadratic_model(sigma, eps);
    const auto lin = build_linearization(m, 1e-5);
    const BoundaryCurves curves(m, lin.path());
    const double f = std::abs(std::log(sigma));
    CHECK_THROWS_AS(tau_L_experiment(lin, curves, sigma, eps, 1.1, f, 10, rescaled(1e-6)),
                    PreconditionError);
    CHECK_THROWS_AS(tau_L_experiment(lin, curves, sigma, eps, 0.0, 1.0, 10, rescaled(1e-6)),
                    PreconditionError);
    const auto r = tau_L_experiment(lin, curves, sigma, eps, 0.0, f, 400, rescaled(2.5e-6, 3));
    CHECK(r.tau.size() == 400);
    CHECK(r.censored == 0);
    CHECK(r.upper_first.ci_low <= 0.5);
    CHECK(r.upper_first.ci_high >= 0.5);
    CHECK(r.window_low == doctest::Approx(0.5 - sigma * f / 2));
    CHECK(r.window_high == doctest::Approx(0.5 - sigma / (2 * f)));
    CHECK(r.in_window.p_hat > 0.8);
    std::uint64_t total = 0;
    for (auto c : r.counts) total += c;
    CHECK(total == 400);
    CHECK(r.bin_edges.back() == doctest::Approx(r.T));
}

TEST_CASE("sup |y| experiment") {
    const auto m = quadratic_model(0.01, 0.25);
    IntegratorConfig cfg;
    cfg.dt = 1e-3;
    const auto big = sup_bound_experiment(m, 1.0, 50, cfg, 1e-3);
    CHECK(big.successes == 0);
    const auto small = sup_bound_experiment(m, 0.002, 50, cfg, 1e-3);
    CHECK(small.successes == 50);
    CHECK_THROWS_AS(sup_bound_experiment(m, 0.0, 10, cfg, 1e-3), PreconditionError);
}

TEST_CASE("y0 variance experiment matches the variance ODE") {
    const double sigma = 0.01;
    const double eps = 0.25;
    const auto lin = build_linearization(quadratic_model(sigma, eps), 1e-3);
    const VarianceData var(lin);
    const auto rows =
        y0_variance_experiment(lin, var, sigma, {0.01, 0.05, 0.25, 0.5}, 3000, rescaled(2e-4, 12));
    for (const auto& r : rows) {
        CHECK(r.predicted == doctest::Approx(sigma * sigma * oracle::v(r.t, eps)).epsilon(1e-6));
        CHECK(std::abs(r.sample_variance - r.predicted) <= 4 * r.standard_error);
    }
    CHECK_THROWS_AS(y0_variance_experiment(lin, var, sigma, {0.3, 0.1}, 10, rescaled(1e-3)),
                    PreconditionError);
}
