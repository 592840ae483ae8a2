#include "chainbreak/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "chainbreak/errors.hpp"

namespace chainbreak::io {

namespace {

double get_number(const Json& obj, const std::string& key, const std::string& where) {
    const auto it = obj.find(key);
    if (it == obj.end()) throw ConfigError(where + "." + key + ": missing required field");
    if (!it->is_number()) throw ConfigError(where + "." + key + ": expected a number");
    return it->get<double>();
}

std::optional<double> get_optional(const Json& obj, const std::string& key,
                                   const std::string& where) {
    if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
    return get_number(obj, key, where);
}

std::vector<double> get_numbers(const Json& obj, const std::string& key,
                                const std::string& where) {
    const auto it = obj.find(key);
    if (it == obj.end()) throw ConfigError(where + "." + key + ": missing required field");
    if (!it->is_array()) throw ConfigError(where + "." + key + ": expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < it->size(); ++i) {
        const auto& v = (*it)[i];
        if (!v.is_number()) {
            throw ConfigError(where + "." + key + "[" + std::to_string(i) +
                              "]: expected a number");
        }
        out.push_back(v.get<double>());
    }
    return out;
}

std::string get_string(const Json& obj, const std::string& key, const std::string& where) {
    const auto& v = obj.at(key);
    if (!v.is_string()) throw ConfigError(where + "." + key + ": expected a string");
    return v.get<std::string>();
}

// Re-throws library errors as ConfigError with the field path attached.
template <class F>
auto with_context(const std::string& where, F&& f) {
    try {
        return f();
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(where + ": " + e.what());
    }
}

}  // namespace

void require_fields(const Json& obj, const std::vector<std::string>& allowed,
                    const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& item : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
            throw ConfigError(where + "." + item.key() + ": unknown field");
        }
    }
}

bool non_negative_integer(const Json& v) {
    if (v.is_number_unsigned()) return true;
    return v.is_number_integer() && v.get<std::int64_t>() >= 0;
}

Json to_json(const Potential& potential) {
    Json j;
    if (potential.form() == Potential::Form::Quadratic) {
        j["form"] = "quadratic";
        j["coeffs"] = potential.pieces().front().coeffs;
    } else {
        j["form"] = "piecewise_poly";
        Json pieces = Json::array();
        for (const auto& piece : potential.pieces()) {
            pieces.push_back(Json{{"lo", piece.lo}, {"hi", piece.hi}, {"coeffs", piece.coeffs}});
        }
        j["pieces"] = pieces;
    }
    j["a"] = potential.a();
    j["b"] = potential.b();
    j["a0"] = potential.a0();
    j["u0"] = potential.u0();
    return j;
}

Potential potential_from_json(const Json& j, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    if (!j.contains("form")) throw ConfigError(where + ".form: missing required field");
    const std::string form = get_string(j, "form", where);
    const double a = get_number(j, "a", where);
    const double b = get_number(j, "b", where);
    const auto a0 = get_optional(j, "a0", where);
    const auto u0 = get_optional(j, "u0", where);
    if (form == "quadratic") {
        require_fields(j, {"form", "coeffs", "a", "b", "a0", "u0"}, where);
        const auto c = get_numbers(j, "coeffs", where);
        if (c.size() != 3) throw ConfigError(where + ".coeffs: expected [c2, c1, c0]");
        return with_context(where, [&] { return Potential::quadratic(c[0], c[1], c[2], a, b, a0, u0); });
    }
    if (form == "piecewise_poly") {
        require_fields(j, {"form", "pieces", "a", "b", "a0", "u0"}, where);
        if (!j.contains("pieces") || !j.at("pieces").is_array()) {
            throw ConfigError(where + ".pieces: expected an array");
        }
        std::vector<PolyPiece> pieces;
        for (std::size_t i = 0; i < j.at("pieces").size(); ++i) {
            const std::string here = where + ".pieces[" + std::to_string(i) + "]";
            const Json& pj = j.at("pieces")[i];
            require_fields(pj, {"lo", "hi", "coeffs"}, here);
            pieces.push_back(PolyPiece{get_number(pj, "lo", here), get_number(pj, "hi", here),
                                       get_numbers(pj, "coeffs", here)});
        }
        return with_context(where, [&] { return Potential::piecewise(pieces, a, b, a0, u0); });
    }
    throw ConfigError(where + ".form: expected \"quadratic\" or \"piecewise_poly\", got \"" +
                      form + "\"");
}

Json to_json(const ModelParams& params) {
    Json j;
    j["potential"] = to_json(params.potential.base());
    j["sigma"] = params.sigma;
    j["epsilon"] = params.epsilon;
    j["pull"] = params.pull.coeffs();
    j["blend_width"] = params.potential.blend_width();
    j["drift_potential"] =
        params.drift_potential == DriftPotential::Raw ? "raw" : "extended";
    return j;
}

ModelParams model_from_json(const Json& j, const std::string& where) {
    require_fields(j, {"potential", "sigma", "epsilon", "pull", "blend_width", "drift_potential"},
                   where);
    if (!j.contains("potential")) throw ConfigError(where + ".potential: missing required field");
    const Potential base = potential_from_json(j.at("potential"), where + ".potential");
    const auto width = get_optional(j, "blend_width", where);
    ModelParams params{with_context(where + ".blend_width", [&] { return extend(base, width); })};
    params.sigma = get_number(j, "sigma", where);
    params.epsilon = get_number(j, "epsilon", where);
    if (j.contains("pull")) {
        const auto coeffs = get_numbers(j, "pull", where);
        params.pull = with_context(where + ".pull",
                                   [&] { return PullSchedule::polynomial(coeffs); });
    }
    if (j.contains("drift_potential")) {
        const std::string s = get_string(j, "drift_potential", where);
        if (s == "extended") {
            params.drift_potential = DriftPotential::Extended;
        } else if (s == "raw") {
            params.drift_potential = DriftPotential::Raw;
        } else {
            throw ConfigError(where + ".drift_potential: expected \"extended\" or \"raw\"");
        }
    }
    with_context(where, [&] {
        params.validate();
        return 0;
    });
    return params;
}

Json to_json(const IntegratorConfig& cfg) {
    Json j;
    j["frame"] = to_string(cfg.frame);
    j["dt"] = cfg.dt;
    j["scheme"] = to_string(cfg.scheme);
    j["crossing"] = to_string(cfg.crossing);
    j["seed"] = cfg.seed;
    j["trial_index"] = cfg.trial_index;
    return j;
}

IntegratorConfig integrator_from_json(const Json& j, IntegratorConfig base,
                                      const std::string& where) {
    require_fields(j, {"frame", "dt", "scheme", "crossing", "seed", "trial_index"}, where);
    auto parse = [&](const char* key, auto parser) {
        return with_context(where + "." + key, [&] { return parser(get_string(j, key, where)); });
    };
    if (j.contains("frame")) base.frame = parse("frame", parse_frame);
    if (j.contains("scheme")) base.scheme = parse("scheme", parse_scheme);
    if (j.contains("crossing")) base.crossing = parse("crossing", parse_crossing);
    if (j.contains("dt")) {
        base.dt = get_number(j, "dt", where);
        if (!(base.dt >= 0.0)) throw ConfigError(where + ".dt: must be >= 0 (0 = default)");
    }
    for (const char* key : {"seed", "trial_index"}) {
        if (!j.contains(key)) continue;
        if (!non_negative_integer(j.at(key))) {
            throw ConfigError(where + "." + key + ": expected a non-negative integer");
        }
        (std::string(key) == "seed" ? base.seed : base.trial_index) =
            j.at(key).get<std::uint64_t>();
    }
    return base;
}

Json to_json(const EstimateResult& est) {
    Json j;
    j["p_hat"] = est.p_hat;
    j["n"] = est.n;
    j["successes"] = est.successes;
    j["ci"] = {est.ci_low, est.ci_high};
    j["capped_count"] = est.capped_count;
    j["seed"] = est.seed;
    j["warnings"] = est.warnings;
    return j;
}

Json to_json(const RegimeSpec& regime) {
    Json j;
    j["label"] = to_string(regime.regime);
    j["margin"] = regime.margin;
    j["fast_threshold"] = regime.fast_threshold;
    j["slow_threshold"] = regime.slow_threshold;
    j["kramers_threshold"] = regime.kramers_threshold;
    if (regime.regime == Regime::Intermediate) j["note"] = kIntermediateNote;
    return j;
}

Json to_json(const BreakRecord& rec) {
    Json j;
    j["tau"] = rec.tau;
    j["side"] = to_string(rec.side);
    j["x_at_exit"] = rec.x_at_exit;
    j["steps"] = rec.steps;
    j["capped"] = rec.capped;
    return j;
}

namespace {

// Case-insensitive, ignoring '_' and '-': "bridge_corrected" == "BridgeCorrected".
std::string normalize(const std::string& s) {
    std::string out;
    for (unsigned char c : s) {
        if (c != '_' && c != '-') out.push_back(static_cast<char>(std::tolower(c)));
    }
    return out;
}

}  // namespace

Frame parse_frame(const std::string& s) {
    const std::string v = normalize(s);
    if (v == "physical") return Frame::Physical;
    if (v == "rescaled") return Frame::Rescaled;
    throw ConfigError("unknown frame \"" + s + "\" (physical|rescaled)");
}

Scheme parse_scheme(const std::string& s) {
    const std::string v = normalize(s);
    if (v == "explicitem") return Scheme::ExplicitEM;
    if (v == "semiimplicitem") return Scheme::SemiImplicitEM;
    throw ConfigError("unknown scheme \"" + s + "\" (ExplicitEM|SemiImplicitEM)");
}

Crossing parse_crossing(const std::string& s) {
    const std::string v = normalize(s);
    if (v == "grid") return Crossing::Grid;
    if (v == "linearinterp") return Crossing::LinearInterp;
    if (v == "bridgecorrected") return Crossing::BridgeCorrected;
    throw ConfigError("unknown crossing \"" + s + "\" (Grid|LinearInterp|BridgeCorrected)");
}

ForceMode parse_force_mode(const std::string& s) {
    const std::string v = normalize(s);
    if (v == "allpairs") return ForceMode::AllPairs;
    if (v == "neighborlist") return ForceMode::NeighborList;
    throw ConfigError("unknown force mode \"" + s + "\" (all-pairs|neighbor-list)");
}

std::string format_double(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

void write_trajectory_csv(std::ostream& os, const ModelParams& params,
                          const TrajectoryPath& path) {
    os << "t,x,left_edge,right_edge\n";
    for (std::size_t i = 0; i < path.t.size(); ++i) {
        const double t = path.t[i];
        os << format_double(t) << ',' << format_double(path.x[i]) << ','
           << format_double(params.right_end(t) - params.b()) << ','
           << format_double(params.b()) << '\n';
    }
}

void write_curves_csv(std::ostream& os, const LinearizationData& lin,
                      const BoundaryCurves& curves, const VarianceData& var,
                      std::size_t stride) {
    os << "t,x_det,A,d_plus,d_minus,v,xi\n";
    const auto& path = lin.path();
    auto row = [&](std::size_t i) {
        const double t = path.time(i);
        os << format_double(t) << ',' << format_double(path.values()[i]) << ','
           << format_double(lin.A()[i]) << ',' << format_double(curves.d_plus(t)) << ','
           << format_double(curves.d_minus(t)) << ',' << format_double(var.v()[i]) << ','
           << format_double(var.xi()[i]) << '\n';
    };
    stride = std::max<std::size_t>(1, stride);
    for (std::size_t i = 0; i < path.size(); i += stride) row(i);
    // always end on t_close
    if ((path.size() - 1) % stride != 0) row(path.size() - 1);
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
    os << "sigma,epsilon,regime,p_left,ci_low,ci_high,n\n";
    for (const auto& r : rows) {
        os << format_double(r.sigma) << ',' << format_double(r.epsilon) << ','
           << to_string(r.regime) << ',' << format_double(r.p_left.p_hat) << ','
           << format_double(r.p_left.ci_low) << ',' << format_double(r.p_left.ci_high) << ','
           << r.p_left.n << '\n';
    }
}

void write_histogram_csv(std::ostream& os, const ChainHistogram& hist) {
    os << "bond_index,count,fraction\n";
    for (std::size_t k = 0; k < hist.counts.size(); ++k) {
        const int bond = static_cast<int>(k) + 1;
        os << bond << ',' << hist.counts[k] << ',' << format_double(hist.fraction(bond)) << '\n';
    }
}

}  // namespace chainbreak::io
