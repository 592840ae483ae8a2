#include <cmath>

#include "chainbreak/dynamics.hpp"
#include "chainbreak/errors.hpp"
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

ModelParams quartic_model(double sigma, double eps) {
    ModelParams m{extend(Potential::piecewise({{0.0, 3.0, {0.5, -4.0, 13.0, -20.0, 10.5}}}, 2.0, 3.0))};
    m.sigma = sigma;
    m.epsilon = eps;
    return m;
}

}  // namespace

TEST_CASE("right endpoint examples") {
    auto m = quadratic_model(0.0, 0.25);
    CHECK(right_endpoint(m, 0.0) == 4.0);
    CHECK(right_endpoint(m, 0.5) == 6.0);
    CHECK(right_endpoint(m, 0.5) - m.b() == m.b());
    CHECK(m.t_close() == doctest::Approx(0.5));
    m.pull = PullSchedule::polynomial({0.0, 1.0, 1.0});
    CHECK(right_endpoint(m, 0.0) == 4.0);
    CHECK(m.t_close() == doctest::Approx((std::sqrt(3.0) - 1.0) / 2.0).epsilon(1e-12));
}

TEST_CASE("pull schedules must start at zero and increase") {
    CHECK_THROWS_AS(PullSchedule::polynomial({0.1, 1.0}), ConfigError);
    CHECK_THROWS_AS(PullSchedule::polynomial({0.0, 0.0, 1.0}), ConfigError);
    auto m = quadratic_model(0.0, 0.25);
    m.epsilon = 0.0;
    CHECK_THROWS_AS(m.validate(), ConfigError);
}

TEST_CASE("drift examples") {
    const auto m = quadratic_model(0.0, 0.25);
    for (double t : {0.0, 0.1, 0.3, 0.49}) {
        CHECK(drift(m, 2.0 * (1.0 + t), t, Frame::Rescaled) == doctest::Approx(0.0).scale(1));
    }
    CHECK(drift(m, 2.0, 0.0, Frame::Physical) == 0.0);
    CHECK(drift(m, 1.9, 0.0, Frame::Rescaled) == doctest::Approx(1.6));
    CHECK(drift(m, 1.9, 0.0, Frame::Physical) == doctest::Approx(0.4));
}

TEST_CASE("drift is antisymmetric about the midpoint") {
    for (const auto& m : {quadratic_model(0.0, 0.25), quartic_model(0.0, 0.1)}) {
        for (double t : {0.0, 0.2, 0.45}) {
            const double mid = m.midpoint(t);
            for (double u = 0.0; u < 1.5; u += 0.01) {
                REQUIRE(drift(m, mid + u, t, Frame::Rescaled) ==
                        doctest::Approx(-drift(m, mid - u, t, Frame::Rescaled)).scale(1e-9));
            }
        }
    }
}

TEST_CASE("deterministic path matches the closed form") {
    const double eps = 0.25;
    const auto m = quadratic_model(0.0, eps);
    const auto path = solve_deterministic(m, eps / 100.0);
    CHECK(path.values().front() == 2.0);
    CHECK(path.t_end() == doctest::Approx(0.5));
    double worst = 0.0;
    for (std::size_t i = 0; i < path.size(); ++i) {
        const double t = path.time(i);
        worst = std::max(worst, std::abs(path.values()[i] - oracle::x_det(t, eps)));
        if (t > 0.0) REQUIRE(path.values()[i] < 2.0 * (1.0 + t));
    }
    CHECK(worst <= 1e-8);
    // between nodes through the Hermite interpolant
    for (int k = 0; k < 997; ++k) {
        const double t = 0.0005 * k + 0.00013;
        REQUIRE(std::abs(path.at(t) - oracle::x_det(t, eps)) <= 1e-7);
    }
}

TEST_CASE("quasi-static lag scales with a") {
    // (y - 3)^2 - 2.25: a = 3, b = 4.5, U'' = 2. The lag a eps/(2 U'') = 3 eps/4
    // and eps/U'' = eps/2 only coincide when a = 2.
    const double eps = 0.02;
    ModelParams m{extend(Potential::quadratic(1.0, -6.0, 6.75, 3.0, 4.5))};
    m.epsilon = eps;
    const auto path = solve_deterministic(m, eps / 100.0);
    CHECK(path.t_end() == doctest::Approx(0.5));
    double worst = 0.0;
    for (std::size_t i = 0; i < path.size(); ++i) {
        worst = std::max(worst, std::abs(path.values()[i] - oracle::x_det(path.time(i), eps, 3.0)));
    }
    CHECK(worst <= 1e-8);
    const double lag = 3.0 * (1.0 + 0.4) - path.at(0.4);
    CHECK(lag == doctest::Approx(3.0 * eps / 4.0).epsilon(1e-6));
}

TEST_CASE("deterministic path stays in (a0, x_R - a0)") {
    const auto m = quartic_model(0.0, 0.05);
    const auto path = solve_deterministic(m, 1e-4);
    for (std::size_t i = 0; i < path.size(); ++i) {
        const double t = path.time(i);
        REQUIRE(path.values()[i] > m.potential.base().a0());
        REQUIRE(path.values()[i] < m.right_end(t) - m.potential.base().a0());
    }
}

TEST_CASE("stiff steps are rejected") {
    const auto m = quadratic_model(0.0, 0.01);
    CHECK_THROWS_AS(solve_deterministic(m, 0.01), IntegrationError);
    CHECK_THROWS_AS(solve_deterministic(m, 0.0), PreconditionError);
    IntegratorConfig cfg;
    cfg.dt = 0.3;  // physical, A1 = 4
    CHECK_THROWS_AS(simulate_trajectory(quadratic_model(0.01, 0.25), cfg), PreconditionError);
    cfg.scheme = Scheme::SemiImplicitEM;
    CHECK_NOTHROW(simulate_trajectory(quadratic_model(0.01, 0.25), cfg));
}

TEST_CASE("noiseless runs break right near the closed-form root") {
    const double eps = 0.25;
    const double root = oracle::right_break_time(eps);
    CHECK(root == doctest::Approx(0.5 - eps / 4.0).epsilon(1e-3));
    for (Frame frame : {Frame::Physical, Frame::Rescaled}) {
        for (Crossing crossing : {Crossing::Grid, Crossing::LinearInterp, Crossing::BridgeCorrected}) {
            for (Scheme scheme : {Scheme::ExplicitEM, Scheme::SemiImplicitEM}) {
                const auto m = quadratic_model(0.0, eps);
                IntegratorConfig cfg;
                cfg.frame = frame;
                cfg.crossing = crossing;
                cfg.scheme = scheme;
                const BreakRecord rec = simulate_trajectory(m, cfg);
                const double h = rescaled_step(m, cfg);
                CHECK(rec.side == Side::Right);
                CHECK_FALSE(rec.capped);
                CHECK(std::abs(rec.tau - root) <= 2.0 * h);
                CHECK(rec.x_at_exit == doctest::Approx(m.right_end(rec.tau) - m.b()));
            }
        }
    }
}

TEST_CASE("raw and extended drifts give bit-identical noiseless records") {
    auto ext = quartic_model(0.0, 0.1);
    auto raw = ext;
    raw.drift_potential = DriftPotential::Raw;
    IntegratorConfig cfg;
    CHECK(simulate_trajectory(ext, cfg) == simulate_trajectory(raw, cfg));
}

TEST_CASE("noiseless Euler path tracks the deterministic solution") {
    const double eps = 0.25;
    auto m = quadratic_model(0.0, eps);
    m.drift_potential = DriftPotential::Raw;
    IntegratorConfig cfg;
    cfg.dt = 1e-3;
    const auto path = simulate_path(m, cfg);
    // the raw force jumps at the cutoff, so the reference uses the extension
    const auto det = solve_deterministic(quadratic_model(0.0, eps), eps / 100.0);
    double worst = 0.0;
    for (std::size_t i = 0; i < path.t.size(); ++i) {
        worst = std::max(worst, std::abs(path.x[i] - det.at(path.t[i])));
    }
    // first-order scheme: error of order dt in physical units
    CHECK(worst < 5e-3);
    CHECK(worst > 0.0);
}

TEST_CASE("halving dt: Grid moves tau by O(dt), interpolated changes shrink") {
    const double eps = 0.25;
    const auto m = quadratic_model(0.0, eps);
    auto tau = [&](Crossing c, double dt) {
        IntegratorConfig cfg;
        cfg.crossing = c;
        cfg.dt = dt;
        return simulate_trajectory(m, cfg).tau;
    };
    const double root = oracle::right_break_time(eps);
    double prev_lin = 1.0;
    for (double dt : {0.02, 0.01, 0.005, 0.0025, 0.00125}) {
        // dt is physical; tau is rescaled
        const double change_grid = std::abs(tau(Crossing::Grid, dt) - tau(Crossing::Grid, dt / 2));
        const double change_lin =
            std::abs(tau(Crossing::LinearInterp, dt) - tau(Crossing::LinearInterp, dt / 2));
        CHECK(change_grid <= 2.0 * dt * eps);
        CHECK(change_lin < prev_lin);
        CHECK(std::abs(tau(Crossing::LinearInterp, dt) - root) <= dt * eps);
        prev_lin = change_lin;
    }
}

TEST_CASE("records are reproducible and bounded by closure") {
    const auto m = quadratic_model(0.05, 0.05);
    IntegratorConfig cfg;
    cfg.seed = 99;
    cfg.dt = 1e-3;
    const auto a = run_trials(m, cfg, 64, 1);
    const auto b = run_trials(m, cfg, 64, 4);
    CHECK(a == b);
    for (std::size_t i = 0; i < a.size(); ++i) {
        IntegratorConfig single = cfg;
        single.trial_index = i;
        REQUIRE(simulate_trajectory(m, single) == a[i]);
        REQUIRE(a[i].tau <= m.t_close());
        const double edge = a[i].side == Side::Left ? m.b() : m.right_end(a[i].tau) - m.b();
        REQUIRE(a[i].x_at_exit == doctest::Approx(edge));
    }
}

TEST_CASE("trial blocks compose") {
    const auto m = quadratic_model(0.05, 0.05);
    IntegratorConfig cfg;
    cfg.dt = 1e-3;
    const auto all = run_trials(m, cfg, 20, 2);
    cfg.trial_index = 10;
    const auto tail = run_trials(m, cfg, 10, 3);
    for (int i = 0; i < 10; ++i) CHECK(all[10 + i] == tail[i]);
}

TEST_CASE("paths record in-domain samples with their noise tag") {
    const auto m = quadratic_model(0.05, 0.05);
    IntegratorConfig cfg;
    cfg.dt = 1e-3;
    cfg.seed = 5;
    cfg.trial_index = 3;
    const auto full = simulate_path(m, cfg);
    const auto thin = simulate_path(m, cfg, 10);
    CHECK(full.record == simulate_trajectory(m, cfg));
    CHECK(thin.record == full.record);
    CHECK(full.tag.step == doctest::Approx(1e-3 * 0.05));
    CHECK(thin.t.size() == (full.t.size() + 9) / 10);
    for (std::size_t i = 0; i < full.t.size(); ++i) {
        REQUIRE(full.x[i] < m.b());
        REQUIRE(full.x[i] > m.right_end(full.t[i]) - m.b());
    }
    CHECK_THROWS_AS(simulate_path(m, cfg, 0), PreconditionError);
}

TEST_CASE("frame equivalence") {
    SUBCASE("noiseless") {
        const auto m = quadratic_model(0.0, 0.25);
        IntegratorConfig phys;
        IntegratorConfig resc;
        resc.frame = Frame::Rescaled;
        const auto cmp = equivalence_check(m, phys, resc, 3);
        CHECK(cmp.physical.successes == 0);
        CHECK(cmp.rescaled.successes == 0);
        CHECK(cmp.consistent);
        CHECK(simulate_trajectory(m, phys).tau ==
              doctest::Approx(simulate_trajectory(m, resc).tau).epsilon(1e-9));
    }
    SUBCASE("empty experiment") {
        const auto m = quadratic_model(0.01, 0.25);
        IntegratorConfig resc;
        resc.frame = Frame::Rescaled;
        CHECK_THROWS_AS(equivalence_check(m, IntegratorConfig{}, resc, 0), PreconditionError);
        CHECK_THROWS_AS(run_trials(m, IntegratorConfig{}, 0), PreconditionError);
    }
    SUBCASE("noisy, both sides occur") {
        const auto m = quadratic_model(0.05, 0.01);
        IntegratorConfig phys;
        phys.dt = 2e-3;
        IntegratorConfig resc = phys;
        resc.frame = Frame::Rescaled;
        resc.dt = 2e-3 * 0.01;
        resc.seed = 1;
        const auto cmp = equivalence_check(m, phys, resc, 400);
        CHECK(cmp.physical.p_hat > 0.2);
        CHECK(cmp.consistent);
    }
}

TEST_CASE("default step sizes") {
    const auto m = quadratic_model(0.01, 0.25);
    CHECK(a1_estimate(m) == doctest::Approx(4.0));
    CHECK(default_dt(m, Frame::Physical) == doctest::Approx(2.5e-5));
    CHECK(default_dt(m, Frame::Rescaled) == doctest::Approx(2.5e-5 * 0.25));
    CHECK(default_dt(quadratic_model(0.0, 0.25), Frame::Physical) == doctest::Approx(0.01));
    CHECK(default_dt(quadratic_model(1.0, 0.25), Frame::Physical) == doctest::Approx(0.01));
}
