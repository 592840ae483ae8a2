#include "chainbreak/potential.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "chainbreak/errors.hpp"

namespace chainbreak {

namespace {

std::vector<double> differentiate(const std::vector<double>& desc) {
    if (desc.size() <= 1) return {0.0};
    std::vector<double> out(desc.size() - 1);
    const std::size_t deg = desc.size() - 1;
    for (std::size_t i = 0; i + 1 < desc.size(); ++i) {
        out[i] = desc[i] * static_cast<double>(deg - i);
    }
    return out;
}

double horner(const std::vector<double>& desc, double y) {
    double acc = 0.0;
    for (double c : desc) acc = acc * y + c;
    return acc;
}

std::string fmt_point(double y) {
    std::ostringstream os;
    os.precision(17);
    os << y;
    return os.str();
}

}  // namespace

Potential Potential::quadratic(double c2, double c1, double c0, double a, double b,
                               std::optional<double> a0, std::optional<double> u0) {
    Potential p;
    p.form_ = Form::Quadratic;
    p.a_ = a;
    p.b_ = b;
    p.pieces_ = {PolyPiece{0.0, b, {c2, c1, c0}}};
    p.finish(a0, u0);
    return p;
}

Potential Potential::piecewise(std::vector<PolyPiece> pieces, double a, double b,
                               std::optional<double> a0, std::optional<double> u0) {
    if (pieces.empty()) throw ConfigError("piecewise potential needs at least one piece");
    if (pieces.front().lo != 0.0) throw ConfigError("first piece must start at 0");
    if (pieces.back().hi != b) throw ConfigError("last piece must end at b");
    for (std::size_t i = 0; i < pieces.size(); ++i) {
        if (!(pieces[i].hi > pieces[i].lo)) throw ConfigError("piece with empty range");
        if (pieces[i].coeffs.empty()) throw ConfigError("piece without coefficients");
        if (i > 0 && pieces[i].lo != pieces[i - 1].hi) {
            throw ConfigError("pieces must be contiguous");
        }
    }
    Potential p;
    p.form_ = Form::PiecewisePoly;
    p.a_ = a;
    p.b_ = b;
    p.pieces_ = std::move(pieces);
    p.finish(a0, u0);
    return p;
}

void Potential::finish(std::optional<double> a0, std::optional<double> u0) {
    if (!(std::isfinite(a_) && std::isfinite(b_) && b_ > 0.0 && a_ > 0.0)) {
        throw ConfigError("potential needs finite a > 0 and b > 0");
    }
    derivs_.clear();
    for (const auto& piece : pieces_) {
        std::array<std::vector<double>, 4> d;
        d[0] = piece.coeffs;
        for (int k = 1; k < 4; ++k) d[k] = differentiate(d[k - 1]);
        derivs_.push_back(std::move(d));
    }
    a0_ = a0.value_or(a_ / 2.0);
    if (u0) {
        u0_ = *u0;
    } else {
        double lowest = std::numeric_limits<double>::infinity();
        constexpr int n = kDefaultValidationPoints;
        for (int k = 1; k < n; ++k) {
            const double y = a0_ + (b_ - a0_) * k / n;
            lowest = std::min(lowest, inner(y, 2));
        }
        u0_ = lowest;
    }
}

double Potential::inner(double r, int order) const {
    std::size_t idx = 0;
    while (idx + 1 < pieces_.size() && r >= pieces_[idx].hi) ++idx;
    return horner(derivs_[idx][order], r);
}

double Potential::eval(double y, int order) const {
    if (!std::isfinite(y)) throw EvaluationError("non-finite argument to potential");
    if (order < 0 || order > 3) throw PreconditionError("derivative order must be 0..3");
    const double r = std::abs(y);
    if (r >= b_) return 0.0;
    const double v = inner(r, order);
    return (order % 2 == 1 && std::signbit(y)) ? -v : v;
}

bool ValidationReport::all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

const ValidationCheck& ValidationReport::check(const std::string& name) const {
    for (const auto& c : checks) {
        if (c.name == name) return c;
    }
    throw PreconditionError("no validation check named " + name);
}

ValidationReport validate_potential(const Potential& spec, int grid_points, double tol) {
    if (grid_points < 100) throw PreconditionError("validation needs at least 100 grid points");
    if (!(tol > 0.0)) throw PreconditionError("validation tolerance must be positive");

    const double a = spec.a();
    const double b = spec.b();
    std::vector<double> grid(grid_points);
    for (int k = 0; k < grid_points; ++k) grid[k] = b * k / grid_points;  // [0, b)

    for (double y : grid) {
        for (int order = 0; order <= 2; ++order) {
            if (!std::isfinite(spec.eval(y, order)) || !std::isfinite(spec.eval(-y, order))) {
                throw EvaluationError("potential derivative of order " + std::to_string(order) +
                                      " is not finite at y = " + fmt_point(y));
            }
        }
    }
    if (!std::isfinite(spec.inner(b, 0))) {
        throw EvaluationError("potential is not finite at y = " + fmt_point(b));
    }

    ValidationReport report;

    {
        const double jump = spec.inner(b, 0);
        ValidationCheck c{"continuity_at_b", std::abs(jump) <= tol, b, -std::abs(jump), ""};
        c.detail = "U(b-) = " + fmt_point(jump);
        report.checks.push_back(c);
    }
    {
        double worst = 0.0;
        double at = 0.0;
        for (double y : grid) {
            for (int order = 0; order <= 2; ++order) {
                const double sign = (order == 1) ? -1.0 : 1.0;
                const double diff = std::abs(spec.eval(-y, order) - sign * spec.eval(y, order));
                if (diff > worst) {
                    worst = diff;
                    at = y;
                }
            }
        }
        report.checks.push_back({"symmetry", worst <= tol, at, -worst, ""});
    }
    {
        const double a0 = spec.a0();
        const bool ok = 0.0 < a0 && a0 < a && a < b && b < 2.0 * a;
        ValidationCheck c{"range_b_lt_2a", ok, b, 2.0 * a - b, ""};
        c.detail = "need 0 < a0 < a < b < 2a";
        report.checks.push_back(c);
    }
    {
        // U(a) must be the minimum over y >= 0, which includes U = 0 past b.
        const double ua = spec.value(a);
        double worst = -ua;
        double at = b;
        for (double y : grid) {
            const double margin = spec.value(y) - ua;
            if (margin < worst) {
                worst = margin;
                at = y;
            }
        }
        report.checks.push_back({"minimum_at_a", worst >= -tol, at, worst, ""});
    }
    {
        double worst = std::numeric_limits<double>::infinity();
        double at = spec.a0();
        for (double y : grid) {
            if (y <= spec.a0()) continue;
            const double margin = spec.d2(y) - spec.u0();
            if (margin < worst) {
                worst = margin;
                at = y;
            }
        }
        const bool ok = spec.u0() > 0.0 && worst >= -tol;
        ValidationCheck c{"convexity", ok, at, worst, ""};
        c.detail = "u0 = " + fmt_point(spec.u0());
        report.checks.push_back(c);
    }
    return report;
}

ExtendedPotential::ExtendedPotential(Potential base, double blend_width)
    : base_(std::move(base)), width_(blend_width) {
    if (!(blend_width > 0.0)) throw PreconditionError("blend width must be positive");
    const double b = base_.b();
    for (int k = 0; k < 4; ++k) ub_[k] = base_.inner(b, k);
    // P'''(w) = U'''(b) + 24 q w = 0.
    quartic_ = -ub_[3] / (24.0 * width_);

    const double low_curv = std::min(ub_[2], ub_[2] + 0.5 * ub_[3] * width_);
    if (low_curv < base_.u0()) {
        std::ostringstream os;
        os.precision(17);
        os << "continuation curvature " << low_curv << " drops below u0 = " << base_.u0()
           << " inside the blend region; try a smaller blend width than " << width_;
        throw ExtensionError(os.str());
    }
    tail_v_ = eval_abs(b + width_, 0);
    tail_s_ = eval_abs(b + width_, 1);
    tail_k_ = std::max(eval_abs(b + width_, 2), base_.u0());
}

double ExtendedPotential::eval_abs(double r, int order) const {
    const double b = base_.b();
    if (r <= b) return base_.inner(r, order);
    if (r <= b + width_) {
        const double h = r - b;
        const double q = quartic_;
        switch (order) {
            case 0:
                return ub_[0] + h * (ub_[1] + h * (ub_[2] / 2.0 + h * (ub_[3] / 6.0 + h * q)));
            case 1:
                return ub_[1] + h * (ub_[2] + h * (ub_[3] / 2.0 + h * 4.0 * q));
            case 2:
                return ub_[2] + h * (ub_[3] + h * 12.0 * q);
            default:
                return ub_[3] + h * 24.0 * q;
        }
    }
    const double h = r - b - width_;
    switch (order) {
        case 0:
            return tail_v_ + h * (tail_s_ + 0.5 * tail_k_ * h);
        case 1:
            return tail_s_ + tail_k_ * h;
        case 2:
            return tail_k_;
        default:
            return 0.0;
    }
}

double ExtendedPotential::eval(double y, int order) const {
    if (!std::isfinite(y)) throw EvaluationError("non-finite argument to potential");
    if (order < 0 || order > 3) throw PreconditionError("derivative order must be 0..3");
    const double v = eval_abs(std::abs(y), order);
    return (order % 2 == 1 && std::signbit(y)) ? -v : v;
}

double default_blend_width(const Potential& spec) { return (spec.b() - spec.a()) / 2.0; }

ExtendedPotential extend(const Potential& spec, std::optional<double> blend_width) {
    return ExtendedPotential(spec, blend_width.value_or(default_blend_width(spec)));
}

}  // namespace chainbreak
