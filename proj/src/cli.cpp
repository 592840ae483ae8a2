#include "chainbreak/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "chainbreak/errors.hpp"
#include "chainbreak/experiments.hpp"
#include "chainbreak/parallel.hpp"

namespace chainbreak::cli {

using io::Json;

namespace {

Json experiment_to_json(const ExperimentConfig& e) {
    Json j;
    j["n"] = e.n;
    j["det_dt"] = e.det_dt;
    j["margin"] = e.margin;
    j["trajectory_thin"] = e.trajectory_thin;
    j["curves_stride"] = e.curves_stride;
    j["D"] = e.D;
    j["H_over_sigma"] = e.H_over_sigma;
    j["t_end_fraction"] = e.t_end_fraction;
    j["f_plus"] = e.f_plus;
    j["bins"] = e.bins;
    j["t_star"] = e.t_star;
    j["Delta"] = e.Delta;
    j["sweep_sigma"] = e.sweep_sigma;
    j["sweep_epsilon"] = e.sweep_epsilon;
    j["chain_N"] = e.chain_N;
    j["chain_force_mode"] = to_string(e.chain_force_mode);
    j["chain_dt"] = e.chain_dt;
    return j;
}

std::string field(const std::string& key) { return "experiment." + key; }

double number(const Json& j, const std::string& key) {
    if (!j.at(key).is_number()) throw ConfigError(field(key) + ": expected a number");
    return j.at(key).get<double>();
}

std::uint64_t count(const Json& j, const std::string& key) {
    if (!io::non_negative_integer(j.at(key))) {
        throw ConfigError(field(key) + ": expected a non-negative integer");
    }
    return j.at(key).get<std::uint64_t>();
}

std::vector<double> numbers(const Json& j, const std::string& key) {
    const Json& v = j.at(key);
    if (!v.is_array()) throw ConfigError(field(key) + ": expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) {
            throw ConfigError(field(key) + "[" + std::to_string(i) + "]: expected a number");
        }
        out.push_back(v[i].get<double>());
    }
    return out;
}

ExperimentConfig experiment_from_json(const Json& j) {
    ExperimentConfig e;
    io::require_fields(j,
                       {"n", "det_dt", "margin", "trajectory_thin", "curves_stride", "D",
                        "H_over_sigma", "t_end_fraction", "f_plus", "bins", "t_star", "Delta",
                        "sweep_sigma", "sweep_epsilon", "chain_N", "chain_force_mode",
                        "chain_dt"},
                       "experiment");
    if (j.contains("n")) e.n = count(j, "n");
    if (j.contains("det_dt")) e.det_dt = number(j, "det_dt");
    if (j.contains("margin")) e.margin = number(j, "margin");
    if (j.contains("trajectory_thin")) e.trajectory_thin = count(j, "trajectory_thin");
    if (j.contains("curves_stride")) e.curves_stride = count(j, "curves_stride");
    if (j.contains("D")) e.D = number(j, "D");
    if (j.contains("H_over_sigma")) e.H_over_sigma = numbers(j, "H_over_sigma");
    if (j.contains("t_end_fraction")) e.t_end_fraction = numbers(j, "t_end_fraction");
    if (j.contains("f_plus")) e.f_plus = number(j, "f_plus");
    if (j.contains("bins")) e.bins = static_cast<int>(count(j, "bins"));
    if (j.contains("t_star")) e.t_star = number(j, "t_star");
    if (j.contains("Delta")) e.Delta = number(j, "Delta");
    if (j.contains("sweep_sigma")) e.sweep_sigma = numbers(j, "sweep_sigma");
    if (j.contains("sweep_epsilon")) e.sweep_epsilon = numbers(j, "sweep_epsilon");
    if (j.contains("chain_N")) e.chain_N = static_cast<int>(count(j, "chain_N"));
    if (j.contains("chain_force_mode")) {
        if (!j.at("chain_force_mode").is_string()) {
            throw ConfigError(field("chain_force_mode") + ": expected a string");
        }
        try {
            e.chain_force_mode = io::parse_force_mode(j.at("chain_force_mode").get<std::string>());
        } catch (const ConfigError& ex) {
            throw ConfigError(field("chain_force_mode") + ": " + ex.what());
        }
    }
    if (j.contains("chain_dt")) e.chain_dt = number(j, "chain_dt");
    return e;
}

void check_experiment(const ExperimentConfig& e) {
    if (e.n == 0) throw ConfigError(field("n") + ": must be >= 1");
    if (!(e.det_dt >= 0.0)) throw ConfigError(field("det_dt") + ": must be >= 0");
    if (!(e.margin > 0.0)) throw ConfigError(field("margin") + ": must be > 0");
    if (e.curves_stride == 0) throw ConfigError(field("curves_stride") + ": must be >= 1");
    if (!(e.D >= 0.0)) throw ConfigError(field("D") + ": must be >= 0");
    if (!(e.f_plus >= 0.0)) throw ConfigError(field("f_plus") + ": must be >= 0 (0 = |ln sigma|)");
    if (e.bins < 1) throw ConfigError(field("bins") + ": must be >= 1");
    if (!(e.chain_dt >= 0.0)) throw ConfigError(field("chain_dt") + ": must be >= 0");
    for (double f : e.t_end_fraction) {
        if (!(f >= 0.0 && f <= 1.0)) {
            throw ConfigError(field("t_end_fraction") + ": entries must lie in [0, 1]");
        }
    }
}

double resolved_det_dt(const RunConfig& cfg) {
    if (cfg.experiment.det_dt > 0.0) return cfg.experiment.det_dt;
    return std::min(1e-3, 0.05 * cfg.model.epsilon / a1_estimate(cfg.model));
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path.string());
    f << text;
    if (!f) throw Error("write failed for " + path.string());
}

template <class Writer>
void write_csv(const RunConfig& cfg, const std::string& name, Writer&& writer) {
    if (cfg.out_dir.empty()) return;
    std::ostringstream os;
    writer(os);
    write_file(std::filesystem::path(cfg.out_dir) / name, os.str());
}

// Line and column of a byte offset, for parse diagnostics.
std::pair<std::size_t, std::size_t> line_col(const std::string& text, std::size_t byte) {
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

Json regime_json(const ModelParams& m, double margin) {
    if (!(m.sigma > 0.0 && m.sigma < 1.0)) return Json{{"label", "undefined"}};
    return io::to_json(classify_regime(m.sigma, m.epsilon, margin));
}

// ---- commands ---------------------------------------------------------------

int cmd_validate(const RunConfig& cfg, Json& result) {
    const ValidationReport report = validate_potential(cfg.model.potential.base());
    Json checks = Json::array();
    for (const auto& c : report.checks) {
        checks.push_back(Json{{"name", c.name},
                              {"passed", c.passed},
                              {"worst_point", c.worst_point},
                              {"worst_value", c.worst_value},
                              {"detail", c.detail}});
    }
    result["checks"] = checks;
    result["all_passed"] = report.all_passed();
    result["extension"] = Json{{"blend_width", cfg.model.potential.blend_width()},
                               {"tail_curvature", cfg.model.potential.tail_curvature()}};
    return report.all_passed() ? kExitOk : kExitValidation;
}

int cmd_deterministic(const RunConfig& cfg, Json& result) {
    const LinearizationData lin = build_linearization(cfg.model, resolved_det_dt(cfg));
    const BoundaryCurves curves(cfg.model, lin.path());
    const VarianceData var(lin);
    ModelParams quiet = cfg.model;
    quiet.sigma = 0.0;
    IntegratorConfig icfg = cfg.integrator;
    const BreakRecord rec = simulate_trajectory(quiet, icfg);
    result["t_close"] = lin.path().t_end();
    result["grid_step"] = lin.path().step();
    result["A0"] = lin.A0();
    result["A1"] = lin.A1();
    result["M"] = lin.M();
    result["xi_minus"] = var.xi_minus();
    result["xi_plus"] = var.xi_plus();
    result["xi_v_decay_constant"] = var.decay_constant(lin);
    result["d_plus_dominates"] = curves.dominance_holds();
    result["d_plus_decreasing"] = curves.decreasing_holds();
    result["T_of_D"] = curves.T_of_D(cfg.experiment.D);
    result["noiseless_break"] = io::to_json(rec);
    write_csv(cfg, "curves.csv", [&](std::ostream& os) {
        io::write_curves_csv(os, lin, curves, var, cfg.experiment.curves_stride);
    });
    return kExitOk;
}

int cmd_simulate(const RunConfig& cfg, Json& result) {
    const auto records = run_trials(cfg.model, cfg.integrator, cfg.experiment.n, cfg.threads);
    const EstimateResult left = side_estimate(records, Side::Left, cfg.integrator.seed);
    const EstimateResult right = side_estimate(records, Side::Right, cfg.integrator.seed);
    result["n"] = cfg.experiment.n;
    result["p_hat"] = left.p_hat;
    result["ci"] = {left.ci_low, left.ci_high};
    result["left"] = io::to_json(left);
    result["right"] = io::to_json(right);
    double mean_tau = 0.0;
    for (const auto& r : records) mean_tau += r.tau;
    result["mean_tau"] = mean_tau / static_cast<double>(records.size());
    if (cfg.experiment.trajectory_thin > 0) {
        const TrajectoryPath path =
            simulate_path(cfg.model, cfg.integrator, cfg.experiment.trajectory_thin);
        write_csv(cfg, "trajectory.csv",
                  [&](std::ostream& os) { io::write_trajectory_csv(os, cfg.model, path); });
    }
    return kExitOk;
}

int cmd_sweep(const RunConfig& cfg, Json& result) {
    const auto& e = cfg.experiment;
    if (e.sweep_sigma.empty()) throw ConfigError(field("sweep_sigma") + ": empty sweep list");
    if (e.sweep_epsilon.empty()) throw ConfigError(field("sweep_epsilon") + ": empty sweep list");
    std::vector<io::SweepRow> rows;
    Json table = Json::array();
    for (double sigma : e.sweep_sigma) {
        for (double eps : e.sweep_epsilon) {
            ModelParams m = cfg.model;
            m.sigma = sigma;
            m.epsilon = eps;
            m.validate();
            const RegimeSpec regime = classify_regime(sigma, eps, e.margin);
            io::SweepRow row{sigma, eps, regime.regime,
                             estimate_break_prob(m, cfg.integrator, e.n, Side::Left, cfg.threads)};
            Json entry{{"sigma", sigma},
                       {"epsilon", eps},
                       {"regime", io::to_json(regime)},
                       {"p_left", io::to_json(row.p_left)}};
            table.push_back(entry);
            rows.push_back(row);
        }
    }
    result["rows"] = table;
    write_csv(cfg, "sweep.csv", [&](std::ostream& os) { io::write_sweep_csv(os, rows); });
    return kExitOk;
}

int cmd_corridor(const RunConfig& cfg, Json& result) {
    const auto& e = cfg.experiment;
    const LinearizationData lin = build_linearization(cfg.model, resolved_det_dt(cfg));
    const VarianceData var(lin);
    const double sigma = cfg.model.sigma;
    std::vector<double> H;
    std::vector<double> t_ends;
    for (double k : e.H_over_sigma) H.push_back(k * sigma);
    for (double f : e.t_end_fraction) t_ends.push_back(f * lin.path().t_end());
    const auto rows = corridor_grid(lin, var, sigma, H, t_ends, e.n, cfg.integrator, cfg.threads);
    Json table = Json::array();
    for (const auto& r : rows) {
        table.push_back(Json{{"H", r.H},
                             {"H_over_sigma", r.H / sigma},
                             {"t_end", r.t_end},
                             {"empirical", io::to_json(r.empirical)},
                             {"bound", r.bound},
                             {"within_bound", r.empirical.p_hat <= r.bound}});
    }
    result["rows"] = table;
    return kExitOk;
}

int cmd_tau_l(const RunConfig& cfg, Json& result) {
    const auto& e = cfg.experiment;
    const LinearizationData lin = build_linearization(cfg.model, resolved_det_dt(cfg));
    const BoundaryCurves curves(cfg.model, lin.path());
    const double sigma = cfg.model.sigma;
    const double f_plus = e.f_plus > 0.0 ? e.f_plus : std::abs(std::log(sigma));
    const TauLResult r = tau_L_experiment(lin, curves, sigma, cfg.model.epsilon, e.D, f_plus, e.n,
                                          cfg.integrator, e.bins, cfg.threads);
    result["f_plus"] = f_plus;
    result["T"] = r.T;
    result["D2_over_sigma"] = r.D2_over_sigma;
    result["window"] = {r.window_low, r.window_high};
    result["in_window"] = io::to_json(r.in_window);
    result["upper_first"] = io::to_json(r.upper_first);
    result["censored"] = r.censored;
    write_csv(cfg, "tau_histogram.csv", [&](std::ostream& os) {
        os << "bin_low,bin_high,count\n";
        for (std::size_t k = 0; k < r.counts.size(); ++k) {
            os << io::format_double(r.bin_edges[k]) << ',' << io::format_double(r.bin_edges[k + 1])
               << ',' << r.counts[k] << '\n';
        }
    });
    return kExitOk;
}

int cmd_conditional(const RunConfig& cfg, Json& result) {
    const auto& e = cfg.experiment;
    const LinearizationData lin = build_linearization(cfg.model, resolved_det_dt(cfg));
    const BoundaryCurves curves(cfg.model, lin.path());
    const ConditionalHitResult r =
        conditional_hit_experiment(lin, curves, cfg.model.sigma, cfg.model.epsilon, e.D, e.t_star,
                                   e.Delta, e.n, cfg.integrator, cfg.threads);
    result["start"] = r.start;
    result["T"] = curves.T_of_D(e.D);
    result["hits_upper"] = io::to_json(r.hits_upper);
    result["crosses_zero"] = io::to_json(r.crosses_zero);
    return kExitOk;
}

int cmd_chain(const RunConfig& cfg, Json& result) {
    const auto& e = cfg.experiment;
    ChainConfig chain;
    chain.N = e.chain_N;
    chain.potential = cfg.model.potential.base();
    chain.sigma = cfg.model.sigma;
    chain.epsilon = cfg.model.epsilon;
    chain.dt = e.chain_dt;
    chain.seed = cfg.integrator.seed;
    chain.force_mode = e.chain_force_mode;
    const ChainHistogram hist = break_location_histogram(chain, e.n, cfg.threads);
    result["n"] = hist.n;
    result["dt"] = chain.dt > 0.0 ? chain.dt : chain_default_dt(chain);
    result["counts"] = hist.counts;
    Json fractions = Json::array();
    for (std::size_t k = 0; k < hist.counts.size(); ++k) {
        fractions.push_back(hist.fraction(static_cast<int>(k) + 1));
    }
    result["fractions"] = fractions;
    result["capped"] = hist.capped;
    write_csv(cfg, "histogram.csv", [&](std::ostream& os) { io::write_histogram_csv(os, hist); });
    return kExitOk;
}

bool is_validation_error(const std::exception& e) {
    return dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const PreconditionError*>(&e) ||
           dynamic_cast<const ModelViolation*>(&e) || dynamic_cast<const ExtensionError*>(&e) ||
           dynamic_cast<const EvaluationError*>(&e);
}

}  // namespace

ModelParams preset_model(const std::string& name) {
    ModelParams m{extend(Potential::quadratic(1.0, -4.0, 3.0, 2.0, 3.0))};
    if (name == "fast") {
        m.sigma = 0.01;
        m.epsilon = 0.25;
    } else if (name == "slow") {
        m.sigma = 0.02;
        m.epsilon = 5e-4;
    } else {
        throw ConfigError("preset: expected \"fast\" or \"slow\", got \"" + name + "\"");
    }
    return m;
}

RunConfig parse_config(const Json& j) {
    io::require_fields(j, {"command", "preset", "model", "integrator", "experiment", "out", "threads"},
                       "config");
    RunConfig cfg;
    if (j.contains("command")) {
        if (!j.at("command").is_string()) throw ConfigError("config.command: expected a string");
        cfg.command = j.at("command").get<std::string>();
    }
    if (j.contains("preset")) {
        if (!j.at("preset").is_string()) throw ConfigError("config.preset: expected a string");
        cfg.preset = j.at("preset").get<std::string>();
        if (!cfg.preset.empty()) cfg.model = preset_model(cfg.preset);
    }
    if (j.contains("model")) cfg.model = io::model_from_json(j.at("model"));
    if (j.contains("integrator")) cfg.integrator = io::integrator_from_json(j.at("integrator"));
    if (j.contains("experiment")) cfg.experiment = experiment_from_json(j.at("experiment"));
    if (j.contains("out")) {
        if (!j.at("out").is_string()) throw ConfigError("config.out: expected a string");
        cfg.out_dir = j.at("out").get<std::string>();
    }
    if (j.contains("threads")) {
        if (!io::non_negative_integer(j.at("threads"))) {
            throw ConfigError("config.threads: expected a non-negative integer");
        }
        cfg.threads = j.at("threads").get<unsigned>();
    }
    return cfg;
}

Json to_json(const RunConfig& cfg) {
    Json j;
    j["command"] = cfg.command;
    j["preset"] = cfg.preset;
    j["model"] = io::to_json(cfg.model);
    j["integrator"] = io::to_json(cfg.integrator);
    j["experiment"] = experiment_to_json(cfg.experiment);
    j["out"] = cfg.out_dir;
    j["threads"] = cfg.threads;
    return j;
}

Json derived_json(const RunConfig& cfg) {
    Json d;
    d["t_close"] = cfg.model.t_close();
    d["det_dt"] = resolved_det_dt(cfg);
    d["dt_rescaled"] = rescaled_step(cfg.model, cfg.integrator);
    try {
        const LinearizationData lin = build_linearization(cfg.model, resolved_det_dt(cfg));
        d["A0"] = lin.A0();
        d["A1"] = lin.A1();
    } catch (const Error& e) {
        d["A0"] = nullptr;
        d["A1"] = nullptr;
        d["linearization_error"] = e.what();
    }
    d["regime"] = regime_json(cfg.model, cfg.experiment.margin);
    return d;
}

int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    try {
        if (std::find(kCommands.begin(), kCommands.end(), cfg.command) == kCommands.end()) {
            throw ConfigError("command: unknown command \"" + cfg.command + "\"");
        }
        cfg.model.validate();
        check_experiment(cfg.experiment);

        const Json config = to_json(cfg);
        const Json derived = derived_json(cfg);
        out << Json{{"config", config}, {"derived", derived}}.dump(2) << '\n';

        if (!cfg.out_dir.empty()) std::filesystem::create_directories(cfg.out_dir);
        const auto start = std::chrono::steady_clock::now();
        Json result;
        int status = kExitOk;
        const std::string& c = cfg.command;
        if (c == "validate") status = cmd_validate(cfg, result);
        if (c == "deterministic") status = cmd_deterministic(cfg, result);
        if (c == "simulate") status = cmd_simulate(cfg, result);
        if (c == "sweep") status = cmd_sweep(cfg, result);
        if (c == "corridor") status = cmd_corridor(cfg, result);
        if (c == "tau-l") status = cmd_tau_l(cfg, result);
        if (c == "conditional") status = cmd_conditional(cfg, result);
        if (c == "chain") status = cmd_chain(cfg, result);
        const double runtime =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

        // Output location and worker count do not affect results, so they are
        // left out of results.json to keep it byte-identical across reruns.
        Json params = config;
        params.erase("out");
        params.erase("threads");
        Json record;
        record["experiment"] = c;
        record["params"] = params;
        record["derived"] = derived;
        record["seed"] = cfg.integrator.seed;
        record["n"] = cfg.experiment.n;
        record["result"] = result;

        if (!cfg.out_dir.empty()) {
            const std::filesystem::path dir(cfg.out_dir);
            write_file(dir / "results.json", record.dump(2) + "\n");
            write_file(dir / "config.json", config.dump(2) + "\n");
            write_file(dir / "timing.json", Json{{"runtime_seconds", runtime}}.dump(2) + "\n");
        }
        out << Json{{"result", result}, {"runtime_seconds", runtime}}.dump(2) << '\n';
        if (status != kExitOk) err << "error: validation checks failed\n";
        return status;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return is_validation_error(e) ? kExitValidation : kExitRuntime;
    }
}

int main(int argc, char** argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Breaking-chain simulation toolkit"};
    std::string command;
    std::string config_path;
    std::string out_dir;
    std::string preset;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::optional<std::uint64_t> n;
    app.add_option("command", command, "validate|deterministic|simulate|sweep|corridor|tau-l|conditional|chain")
        ->required();
    app.add_option("--config", config_path, "JSON run configuration");
    app.add_option("--out", out_dir, "output directory for results.json and CSVs");
    app.add_option("--seed", seed, "master seed");
    app.add_option("--threads", threads, "worker threads (0 = hardware)");
    app.add_option("--preset", preset, "fast|slow parameter set");
    app.add_option("--n", n, "number of Monte Carlo trials");
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    }

    RunConfig cfg;
    try {
        if (!config_path.empty()) {
            std::ifstream f(config_path, std::ios::binary);
            if (!f) throw ConfigError("--config: cannot open " + config_path);
            std::stringstream buf;
            buf << f.rdbuf();
            const std::string text = buf.str();
            Json doc;
            try {
                doc = Json::parse(text);
            } catch (const Json::parse_error& e) {
                const auto [line, col] = line_col(text, e.byte);
                throw ConfigError(config_path + ":" + std::to_string(line) + ":" +
                                  std::to_string(col) + ": malformed JSON: " + e.what());
            }
            cfg = parse_config(doc);
        }
        cfg.command = command;
        if (!preset.empty()) {
            cfg.preset = preset;
            cfg.model = preset_model(preset);
        }
        if (seed) cfg.integrator.seed = *seed;
        if (threads) cfg.threads = *threads;
        if (n) cfg.experiment.n = *n;
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (cfg.threads == 0) cfg.threads = default_thread_count();
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    }
    return run(cfg, out, err);
}

}  // namespace chainbreak::cli
