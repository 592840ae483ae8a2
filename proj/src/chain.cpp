#include "chainbreak/chain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "chainbreak/detail/integrate.hpp"
#include "chainbreak/errors.hpp"
#include "chainbreak/parallel.hpp"
#include "chainbreak/rng.hpp"

namespace chainbreak {

void ChainConfig::validate() const {
    if (N < 3) throw ConfigError("chain needs N >= 3");
    if (!(epsilon > 0.0)) throw ConfigError("chain needs epsilon > 0");
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ConfigError("chain needs sigma >= 0");
    if (!(dt >= 0.0) || !std::isfinite(dt)) throw ConfigError("chain needs dt >= 0");
}

double ChainConfig::s_close() const { return (potential.b() / potential.a() - 1.0) / epsilon; }

namespace {

void accumulate_forces(const Potential& potential, std::span<const double> x, ForceMode mode,
                       std::vector<double>& f) {
    const std::size_t n = x.size();
    const double b = potential.b();
    f.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = x[j] - x[i];
            if (mode == ForceMode::NeighborList && std::abs(d) >= b) break;
            // -d/dx_i U(x_i - x_j) = U'(x_j - x_i), and the opposite on j
            const double g = potential.d1(d);
            f[i] += g;
            f[j] -= g;
        }
    }
}

}  // namespace

std::vector<double> chain_forces(const Potential& potential, std::span<const double> x,
                                 ForceMode mode) {
    std::vector<double> f;
    accumulate_forces(potential, x, mode, f);
    return f;
}

double chain_default_dt(const ChainConfig& cfg) {
    const double lo = 2.0 * cfg.potential.a() - cfg.potential.b();
    const double hi = cfg.potential.b();
    double peak = 0.0;
    constexpr int m = 1000;
    for (int k = 0; k < m; ++k) peak = std::max(peak, cfg.potential.d2(lo + (hi - lo) * k / m));
    double dt = std::min(0.01, 0.1 / (2.0 * peak));
    if (cfg.sigma > 0.0) dt = std::min(dt, cfg.sigma * cfg.sigma / 4.0);
    return dt;
}

ChainBreakRecord simulate_chain(const ChainConfig& cfg, std::uint64_t trial) {
    cfg.validate();
    const int N = cfg.N;
    const double a = cfg.potential.a();
    const double b = cfg.potential.b();
    const double sigma = cfg.sigma;
    const double dt = cfg.dt > 0.0 ? cfg.dt : chain_default_dt(cfg);
    const double s_close = cfg.s_close();
    const double span = (N - 1) * a;
    auto pulled = [&](double s) { return span * (1.0 + cfg.epsilon * s); };

    std::vector<double> x(N);
    for (int i = 0; i < N; ++i) x[i] = i * a;
    std::vector<double> x_next(N);
    std::vector<double> f(N);
    std::vector<double> g0(N - 1);
    std::vector<double> g1(N - 1);

    RandomStream wiener(cfg.seed, trial, StreamId::Wiener);
    RandomStream coins(cfg.seed, trial, StreamId::BridgeCoins);

    auto finish = [&](double s0, double s1, double theta, int bond, std::uint64_t steps) {
        ChainBreakRecord rec;
        rec.break_time = s0 + theta * (s1 - s0);
        rec.bond_index = bond + 1;
        rec.steps = steps;
        rec.gap_profile.resize(N - 1);
        for (int k = 0; k < N - 1; ++k) rec.gap_profile[k] = g0[k] + theta * (g1[k] - g0[k]);
        rec.gap_profile[bond] = b;
        return rec;
    };

    double s = 0.0;
    std::uint64_t steps = 0;
    const auto max_steps = static_cast<std::uint64_t>(std::ceil(s_close / dt)) + 2;
    while (steps < max_steps) {
        const double s_grid = static_cast<double>(steps + 1) * dt;
        const bool last = s_grid >= s_close;
        const double s1 = last ? s_close : s_grid;
        const double h = s1 - s;
        const double noise_sd = sigma * std::sqrt(h);

        accumulate_forces(cfg.potential, x, cfg.force_mode, f);
        x_next[0] = 0.0;
        for (int i = 1; i < N - 1; ++i) x_next[i] = x[i] + f[i] * h + noise_sd * wiener.normal();
        x_next[N - 1] = pulled(s1);
        ++steps;

        for (int k = 0; k < N - 1; ++k) {
            g0[k] = x[k + 1] - x[k];
            g1[k] = x_next[k + 1] - x_next[k];
        }

        // Earliest linear crossing wins; ties go to the bond nearer the pulled end.
        int bond = -1;
        double best = std::numeric_limits<double>::infinity();
        for (int k = 0; k < N - 1; ++k) {
            if (g1[k] < b) continue;
            const double theta = std::clamp((b - g0[k]) / (g1[k] - g0[k]), 0.0, 1.0);
            if (theta <= best) {
                best = theta;
                bond = k;
            }
        }
        if (bond >= 0) return finish(s, s1, best, bond, steps);

        if (cfg.bridge_correction && sigma > 0.0) {
            for (int k = 0; k < N - 1; ++k) {
                const int free_ends = (k > 0 ? 1 : 0) + (k < N - 2 ? 1 : 0);
                const double var = free_ends * noise_sd * noise_sd;
                const double d0 = b - g0[k];
                const double d1 = b - g1[k];
                if (2.0 * d0 * d1 / var < detail::kBridgeCutoff &&
                    coins.uniform() < detail::bridge_exit_probability(d0, d1, var)) {
                    bond = k;
                }
            }
            if (bond >= 0) return finish(s, s1, 0.5, bond, steps);
        }

        if (last) {
            // Mean gap equals b here, so some gap is at b unless rounding hid it.
            const auto widest = std::max_element(g1.rbegin(), g1.rend());
            const int k = static_cast<int>(g1.rend() - widest) - 1;
            ChainBreakRecord rec = finish(s, s1, 1.0, k, steps);
            rec.capped = true;
            return rec;
        }
        x.swap(x_next);
        s = s1;
    }
    throw IntegrationError("chain trajectory did not reach closure");
}

double ChainHistogram::fraction(int bond) const {
    if (n == 0 || bond < 1 || bond > static_cast<int>(counts.size())) return 0.0;
    return static_cast<double>(counts[bond - 1]) / static_cast<double>(n);
}

ChainHistogram break_location_histogram(const ChainConfig& cfg, std::uint64_t n,
                                        unsigned threads) {
    if (n == 0) throw PreconditionError("break_location_histogram needs n >= 1");
    cfg.validate();
    std::vector<int> bonds(n);
    std::vector<char> capped(n);
    parallel_for(n, threads, [&](std::size_t i) {
        const ChainBreakRecord rec = simulate_chain(cfg, i);
        bonds[i] = rec.bond_index;
        capped[i] = rec.capped ? 1 : 0;
    });
    ChainHistogram out;
    out.n = n;
    out.counts.assign(cfg.N - 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
        ++out.counts[bonds[i] - 1];
        out.capped += capped[i];
    }
    return out;
}

const char* to_string(ForceMode mode) {
    return mode == ForceMode::AllPairs ? "all-pairs" : "neighbor-list";
}

}  // namespace chainbreak
