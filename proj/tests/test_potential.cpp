#include <cmath>
#include <limits>

#include "chainbreak/errors.hpp"
#include "chainbreak/potential.hpp"
#include "doctest.h"

using namespace chainbreak;

namespace {

Potential quadratic_example() { return Potential::quadratic(1.0, -4.0, 3.0, 2.0, 3.0); }

// (y-2)^2 + k (y-2)^4 - (1+k) with k = 1/2, expanded.
Potential quartic_example() {
    return Potential::piecewise({{0.0, 3.0, {0.5, -4.0, 13.0, -20.0, 10.5}}}, 2.0, 3.0);
}

double natural_quadratic(double y) { return y * y - 4.0 * y + 3.0; }

}  // namespace

TEST_CASE("quadratic example passes every check") {
    const auto report = validate_potential(quadratic_example());
    CHECK(report.all_passed());
    CHECK(report.checks.size() == 5);
    for (const auto& c : report.checks) CHECK_MESSAGE(c.passed, c.name);
}

TEST_CASE("defaults for a0 and u0") {
    const auto u = quadratic_example();
    CHECK(u.a0() == doctest::Approx(1.0));
    CHECK(u.u0() == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("b >= 2a fails the range check") {
    const auto u = Potential::quadratic(1.0, -4.0, 3.0, 2.0, 5.0);
    const auto report = validate_potential(u);
    CHECK_FALSE(report.check("range_b_lt_2a").passed);
    CHECK_FALSE(report.all_passed());
}

TEST_CASE("a jump at the cutoff fails continuity") {
    const auto u = Potential::quadratic(1.0, -4.0, 3.5, 2.0, 3.0);
    const auto& c = validate_potential(u).check("continuity_at_b");
    CHECK_FALSE(c.passed);
    CHECK(c.worst_point == 3.0);
    CHECK(c.worst_value == doctest::Approx(-0.5));
}

TEST_CASE("a minimum away from a fails the minimum check") {
    // vertex at 1.5 while a = 2
    const auto u = Potential::quadratic(1.0, -3.0, 0.0, 2.0, 3.0, 1.0, 2.0);
    CHECK_FALSE(validate_potential(u).check("minimum_at_a").passed);
}

TEST_CASE("curvature below u0 fails convexity") {
    const auto u = Potential::quadratic(1.0, -4.0, 3.0, 2.0, 3.0, 1.0, 2.5);
    const auto& c = validate_potential(u).check("convexity");
    CHECK_FALSE(c.passed);
    CHECK(c.worst_value == doctest::Approx(-0.5));
}

TEST_CASE("validation preconditions and non-finite values") {
    const auto u = quadratic_example();
    CHECK_THROWS_AS(validate_potential(u, 99), PreconditionError);
    CHECK_THROWS_AS(validate_potential(u, 1000, 0.0), PreconditionError);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const auto bad = Potential::quadratic(1.0, nan, 3.0, 2.0, 3.0, 1.0, 2.0);
    CHECK_THROWS_AS(validate_potential(bad), EvaluationError);
}

TEST_CASE("evaluation examples") {
    const auto u = quadratic_example();
    CHECK(u.value(2.0) == -1.0);
    CHECK(u.value(3.5) == 0.0);
    CHECK(u.value(3.0) == 0.0);
    CHECK(u.d1(3.2) == 0.0);
    CHECK(u.d2(-4.0) == 0.0);
    CHECK(u.value(-2.0) == u.value(2.0));
    CHECK(u.d1(-1.3) == -u.d1(1.3));
    CHECK(u.d2(-1.3) == u.d2(1.3));
    // one-sided limit from inside
    CHECK(u.inner(3.0, 1) == doctest::Approx(2.0));
}

TEST_CASE("finite differences of the evaluators") {
    const double h = 1e-4;
    for (const auto& u : {quadratic_example(), quartic_example()}) {
        for (int k = 1; k < 290; ++k) {
            const double y = 0.01 * k;
            for (int order = 0; order < 3; ++order) {
                const double fd = (u.eval(y + h, order) - u.eval(y - h, order)) / (2 * h);
                REQUIRE(fd == doctest::Approx(u.eval(y + 0.0, order + 1)).epsilon(1e-6).scale(10));
            }
        }
        const auto ext = extend(u);
        for (int k = 1; k < 800; ++k) {
            const double y = 0.01 * k + 0.005;
            for (int order = 0; order < 3; ++order) {
                const double fd = (ext.eval(y + h, order) - ext.eval(y - h, order)) / (2 * h);
                REQUIRE(fd == doctest::Approx(ext.eval(y, order + 1)).epsilon(1e-6).scale(10));
            }
        }
    }
}

TEST_CASE("quadratic extension is the natural continuation") {
    const auto ext = extend(quadratic_example());
    for (int k = 0; k <= 3000; ++k) {
        const double y = 0.001 * k;
        REQUIRE(ext.value(y) == quadratic_example().inner(y, 0));
    }
    for (int k = 0; k <= 1000; ++k) {
        const double y = 0.01 * k;
        REQUIRE(ext.value(y) == doctest::Approx(natural_quadratic(y)).epsilon(1e-13).scale(1));
        REQUIRE(ext.d2(y) == doctest::Approx(2.0).epsilon(1e-12));
    }
    CHECK(ext.value(4.0) == doctest::Approx(3.0).epsilon(1e-13));
    CHECK(ext.tail_curvature() == doctest::Approx(2.0));
}

TEST_CASE("extension is C3 across the cutoff and convex beyond a0") {
    for (const auto& u : {quadratic_example(), quartic_example()}) {
        const auto ext = extend(u);
        const double b = u.b();
        const double w = ext.blend_width();
        for (double knot : {b, b + w}) {
            for (int order = 0; order <= 3; ++order) {
                const double left = ext.eval(std::nextafter(knot, 0.0), order);
                const double right = ext.eval(std::nextafter(knot, 10.0), order);
                CHECK(left == doctest::Approx(right).epsilon(1e-9).scale(1));
            }
        }
        for (int k = 0; k <= 10000; ++k) {
            const double y = u.a0() + 1e-9 + 10.0 * k / 10000;
            REQUIRE(ext.d2(y) >= u.u0() - 1e-12);
        }
    }
}

TEST_CASE("extension agrees with U on [0, b] and is idempotent") {
    const auto u = quartic_example();
    const auto once = extend(u);
    const auto twice = extend(once.base(), once.blend_width());
    for (int k = 0; k <= 6000; ++k) {
        const double y = 0.001 * k;
        if (y < u.b()) REQUIRE(once.value(y) == u.value(y));
        for (int order = 0; order <= 3; ++order) REQUIRE(once.eval(y, order) == twice.eval(y, order));
    }
}

TEST_CASE("curvature dip in the blend raises an extension error") {
    // (y-2)^2 - 0.2 (y-2)^3 - 0.8: U''(3) = 0.8 and U'''(3) = -1.2
    const auto u = Potential::piecewise({{0.0, 3.0, {-0.2, 2.2, -6.4, 4.8}}}, 2.0, 3.0, 1.0, 0.79);
    CHECK(validate_potential(u).all_passed());
    CHECK_THROWS_AS(extend(u), ExtensionError);
    const auto narrow = extend(u, 0.01);
    CHECK(narrow.d2(3.01) >= 0.79);
    CHECK_THROWS_AS(extend(u, 0.0), PreconditionError);
}

TEST_CASE("piecewise potentials must tile [0, b)") {
    CHECK_THROWS_AS(Potential::piecewise({}, 2.0, 3.0), ConfigError);
    CHECK_THROWS_AS(Potential::piecewise({{0.0, 1.0, {1.0}}, {1.5, 3.0, {1.0}}}, 2.0, 3.0),
                    ConfigError);
    CHECK_THROWS_AS(Potential::piecewise({{0.1, 3.0, {1.0}}}, 2.0, 3.0), ConfigError);
    const auto two = Potential::piecewise(
        {{0.0, 1.5, {1.0, -4.0, 3.0}}, {1.5, 3.0, {1.0, -4.0, 3.0}}}, 2.0, 3.0);
    CHECK(two.value(1.7) == doctest::Approx(quadratic_example().value(1.7)));
    CHECK(validate_potential(two).all_passed());
}
