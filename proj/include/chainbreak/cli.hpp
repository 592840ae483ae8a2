#pragma once

// Command-line front end. A run is described by a RunConfig, read from a
// JSON file and overridden by flags; run() executes it and writes
// results.json (plus CSVs) into the output directory.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "chainbreak/chain.hpp"
#include "chainbreak/dynamics.hpp"
#include "chainbreak/io.hpp"

namespace chainbreak::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitRuntime = 3;

inline const std::vector<std::string> kCommands = {
    "validate", "deterministic", "simulate", "sweep", "corridor", "tau-l", "conditional", "chain"};

/// Quadratic example U = y^2 - 4y + 3 (a = 2, b = 3) with the preset noise
/// and stretching: fast (0.01, 0.25), slow (0.02, 5e-4).
ModelParams preset_model(const std::string& name);

struct ExperimentConfig {
    std::uint64_t n = 1000;
    /// Deterministic solver step (rescaled time); 0 picks min(1e-3, 0.05 eps/A1).
    double det_dt = 0.0;
    double margin = 3.0;
    /// Trajectory dump of trial 0 for `simulate`, every `thin` steps; 0 = off.
    std::uint64_t trajectory_thin = 0;
    /// Stride over the deterministic grid for curves.csv.
    std::uint64_t curves_stride = 1;
    double D = 0.0;
    /// Corridor levels in units of sigma.
    std::vector<double> H_over_sigma = {3.0, 4.0, 5.0};
    /// Corridor horizons as fractions of t_close.
    std::vector<double> t_end_fraction = {0.25, 0.5, 0.75};
    /// 0 selects |ln sigma|.
    double f_plus = 0.0;
    int bins = 40;
    double t_star = 0.0;
    double Delta = 0.0;
    std::vector<double> sweep_sigma;
    std::vector<double> sweep_epsilon;
    int chain_N = 3;
    ForceMode chain_force_mode = ForceMode::NeighborList;
    /// Physical chain step; 0 selects the chain default.
    double chain_dt = 0.0;
};

struct RunConfig {
    std::string command;
    std::string preset;  ///< "", "fast" or "slow"
    ModelParams model = preset_model("fast");
    IntegratorConfig integrator;
    ExperimentConfig experiment;
    std::string out_dir;
    unsigned threads = 0;
};

/// Parses a config document. Throws ConfigError naming the offending field.
RunConfig parse_config(const io::Json& j);

/// Every field, defaults included. Re-parsing gives the same RunConfig.
io::Json to_json(const RunConfig& cfg);

/// Derived quantities: t_close, A0, A1 (when the linearisation exists), regime.
io::Json derived_json(const RunConfig& cfg);

/// Runs the command. Diagnostics go to `err`, the resolved config echo and a
/// short summary to `out`. Returns one of the kExit* codes.
int run(const RunConfig& cfg, std::ostream& out, std::ostream& err);

/// argv front end: `chainbreak <command> [--config F] [--out DIR] [--seed S]
/// [--threads T] [--preset fast|slow] [--n N]`.
int main(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace chainbreak::cli
