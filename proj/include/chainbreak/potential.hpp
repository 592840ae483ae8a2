#pragma once

// Cutoff pair potentials and their convex continuation.
//
// A potential U is stored by its restriction to [0, b) as one or more
// polynomial pieces in the distance y. U(y) = U(|y|), and U vanishes
// identically for |y| >= b. Derivatives at the cutoff are one-sided limits
// from inside (0, b); outside they are exactly zero.

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace chainbreak {

/// One polynomial piece of U on [lo, hi). Coefficients are in descending
/// powers of the distance y (not of y - lo).
struct PolyPiece {
    double lo = 0.0;
    double hi = 0.0;
    std::vector<double> coeffs;
};

class Potential {
  public:
    enum class Form { Quadratic, PiecewisePoly };

    /// U(y) = c2 y^2 + c1 y + c0 on [0, b). When a0 or u0 are omitted the
    /// defaults are a0 = a/2 and u0 = min U'' on (a0, b) sampled on 10^4 points.
    static Potential quadratic(double c2, double c1, double c0, double a, double b,
                               std::optional<double> a0 = {}, std::optional<double> u0 = {});

    /// Pieces must tile [0, b) contiguously.
    static Potential piecewise(std::vector<PolyPiece> pieces, double a, double b,
                               std::optional<double> a0 = {}, std::optional<double> u0 = {});

    Form form() const { return form_; }
    double a() const { return a_; }
    double b() const { return b_; }
    double a0() const { return a0_; }
    double u0() const { return u0_; }
    std::span<const PolyPiece> pieces() const { return pieces_; }

    /// U and its derivatives up to order 3 at y, with the cutoff and the
    /// odd/even symmetry of the derivatives applied.
    double eval(double y, int order) const;
    double value(double y) const { return eval(y, 0); }
    double d1(double y) const { return eval(y, 1); }
    double d2(double y) const { return eval(y, 2); }

    /// Derivative of the inner polynomial at distance r in [0, b], no
    /// cutoff. inner(b, k) is the one-sided limit at b from below.
    double inner(double r, int order) const;

  private:
    Potential() = default;
    void finish(std::optional<double> a0, std::optional<double> u0);

    Form form_ = Form::Quadratic;
    double a_ = 0.0;
    double b_ = 0.0;
    double a0_ = 0.0;
    double u0_ = 0.0;
    std::vector<PolyPiece> pieces_;
    // derivs_[piece][order] holds descending coefficients of the order-th
    // derivative.
    std::vector<std::array<std::vector<double>, 4>> derivs_;
};

struct ValidationCheck {
    std::string name;
    bool passed = false;
    double worst_point = 0.0;  ///< sample point with the largest violation
    double worst_value = 0.0;  ///< signed margin there (negative = violated)
    std::string detail;
};

struct ValidationReport {
    std::vector<ValidationCheck> checks;
    bool all_passed() const;
    const ValidationCheck& check(const std::string& name) const;
};

inline constexpr int kDefaultValidationPoints = 10000;
inline constexpr double kDefaultValidationTol = 1e-10;

/// Grid-based audit of the structural conditions on U: continuity at the
/// cutoff, symmetry, 0 < a0 < a < b < 2a, minimum at a, U'' >= u0 on (a0, b).
/// Throws EvaluationError naming the first point where U is not finite.
ValidationReport validate_potential(const Potential& spec,
                                    int grid_points = kDefaultValidationPoints,
                                    double tol = kDefaultValidationTol);

/// C^3 convex continuation of U beyond the cutoff.
///
/// On [0, b] it is U itself. On (b, b + w] it is the third-order Taylor
/// polynomial of U at b- plus a quartic term that brings the third
/// derivative to zero at b + w. Past b + w it is a quadratic with matched
/// value, slope and curvature max(U~''(b + w), u0).
class ExtendedPotential {
  public:
    ExtendedPotential(Potential base, double blend_width);

    const Potential& base() const { return base_; }
    double blend_width() const { return width_; }
    double a() const { return base_.a(); }
    double b() const { return base_.b(); }
    double u0() const { return base_.u0(); }
    double tail_curvature() const { return tail_k_; }

    double eval(double y, int order) const;
    double value(double y) const { return eval(y, 0); }
    double d1(double y) const { return eval(y, 1); }
    double d2(double y) const { return eval(y, 2); }
    double d3(double y) const { return eval(y, 3); }

  private:
    double eval_abs(double r, int order) const;

    Potential base_;
    double width_;
    // Taylor data of U at b-, and the quartic correction coefficient.
    double ub_[4];
    double quartic_;
    // Tail quadratic anchored at b + w.
    double tail_v_, tail_s_, tail_k_;
};

/// Default blend width (b - a)/2.
double default_blend_width(const Potential& spec);

/// Throws ExtensionError when the continuation's curvature drops below u0.
ExtendedPotential extend(const Potential& spec, std::optional<double> blend_width = {});

}  // namespace chainbreak
