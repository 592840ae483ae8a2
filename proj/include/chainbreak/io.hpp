#pragma once

// JSON (de)serialisation of model objects and the CSV exports.
//
// Readers reject unknown fields with a ConfigError naming the field path.

#include <ostream>
#include <string>
#include <vector>

#include "chainbreak/chain.hpp"
#include "chainbreak/deviation.hpp"
#include "chainbreak/dynamics.hpp"
#include "chainbreak/estimate.hpp"
#include "chainbreak/experiments.hpp"
#include "json.hpp"

namespace chainbreak::io {

using Json = nlohmann::ordered_json;

/// Throws ConfigError if `obj` is not an object or has a key outside `allowed`.
void require_fields(const Json& obj, const std::vector<std::string>& allowed,
                    const std::string& where);

/// Integer-valued and >= 0, whether stored signed or unsigned.
bool non_negative_integer(const Json& v);

Json to_json(const Potential& potential);
/// {"form":"quadratic","coeffs":[c2,c1,c0],"a","b"[,"a0","u0"]} or
/// {"form":"piecewise_poly","pieces":[{"lo","hi","coeffs"}...],"a","b"[,...]}.
Potential potential_from_json(const Json& j, const std::string& where = "potential");

/// sigma, epsilon, pull (ascending coefficients), blend_width, drift_potential
/// and the nested potential.
Json to_json(const ModelParams& params);
ModelParams model_from_json(const Json& j, const std::string& where = "model");

Json to_json(const IntegratorConfig& cfg);
/// Fields missing from `j` keep the values in `base`.
IntegratorConfig integrator_from_json(const Json& j, IntegratorConfig base = {},
                                      const std::string& where = "integrator");

Json to_json(const EstimateResult& est);
Json to_json(const RegimeSpec& regime);
Json to_json(const BreakRecord& rec);

Frame parse_frame(const std::string& s);
Scheme parse_scheme(const std::string& s);
Crossing parse_crossing(const std::string& s);
ForceMode parse_force_mode(const std::string& s);

/// Writes a double with 17 significant digits.
std::string format_double(double v);

/// t, x, left_edge, right_edge (left_edge = x_R - b, right_edge = b).
void write_trajectory_csv(std::ostream& os, const ModelParams& params,
                          const TrajectoryPath& path);

/// t, x_det, A, d_plus, d_minus, v, xi on every `stride`-th grid node.
void write_curves_csv(std::ostream& os, const LinearizationData& lin,
                      const BoundaryCurves& curves, const VarianceData& var,
                      std::size_t stride = 1);

struct SweepRow {
    double sigma = 0.0;
    double epsilon = 0.0;
    Regime regime = Regime::Intermediate;
    EstimateResult p_left;
};

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);

/// bond_index, count, fraction.
void write_histogram_csv(std::ostream& os, const ChainHistogram& hist);

}  // namespace chainbreak::io
