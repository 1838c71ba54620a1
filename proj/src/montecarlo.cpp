#include "iqvi/montecarlo.hpp"

#include <cmath>
#include <optional>

#include "iqvi/errors.hpp"
#include "iqvi/rng.hpp"
#include "iqvi/util.hpp"

namespace iqvi {

int default_impulse_cap(const ProblemSpec& spec, const GridSpec& grid) {
    double bound = value_bound(spec, grid);
    return static_cast<int>(std::ceil(10.0 * std::max(bound, spec.cost_floor) / spec.cost_floor));
}

namespace {

struct SimContext {
    const ProblemSpec& spec;
    const Policy* policy; // null: never intervene
    const GridSpec* grid; // needed for policy lookup / trust region
    const SimConfig& cfg;
    int cap;
    std::optional<TrustRegion> trust;
};

// Nearest-node policy lookup: labels are categorical, so no interpolation.
int policy_action(const SimContext& ctx, double t, std::span<const double> x) {
    if (!ctx.policy) return -1;
    const GridSpec& grid = *ctx.grid;
    double dt_grid = grid.time_step(ctx.spec.horizon);
    int level = static_cast<int>(std::lround(t / dt_grid));
    if (level < 0) level = 0;
    if (level >= ctx.policy->time_levels) level = ctx.policy->time_levels - 1;

    std::vector<int> multi(static_cast<std::size_t>(grid.dim()));
    for (int i = 0; i < grid.dim(); ++i) {
        double u = (x[static_cast<std::size_t>(i)] - grid.lower[static_cast<std::size_t>(i)]) /
                   grid.spacing(i);
        int idx = static_cast<int>(std::lround(u));
        if (idx < 0) idx = 0;
        if (idx >= grid.nodes[static_cast<std::size_t>(i)])
            idx = grid.nodes[static_cast<std::size_t>(i)] - 1;
        multi[static_cast<std::size_t>(i)] = idx;
    }
    return ctx.policy->at(level, grid.flatten(multi));
}

PathStat run_path(const SimContext& ctx, long path_id) {
    const ProblemSpec& spec = ctx.spec;
    const int n = spec.dim;
    const int d = spec.noise_dim;
    const double T = spec.horizon;

    const bool anti = ctx.cfg.antithetic;
    const std::uint64_t stream = anti ? static_cast<std::uint64_t>(path_id / 2)
                                      : static_cast<std::uint64_t>(path_id);
    const double sign = anti && (path_id % 2 == 1) ? -1.0 : 1.0;
    Philox rng(ctx.cfg.seed, stream);

    std::vector<double> x = ctx.cfg.x0;
    std::vector<double> b(static_cast<std::size_t>(n));
    std::vector<double> s(static_cast<std::size_t>(n * d));
    std::vector<double> z(static_cast<std::size_t>(d));

    PathStat stat;
    double running = 0.0;
    double t = ctx.cfg.t0;

    while (t < T - 1e-12) {
        const double h = std::min(ctx.cfg.dt, T - t);

        // Impulse decision first, at most one per step.
        if (stat.impulses < ctx.cap) {
            int j = policy_action(ctx, t, x);
            if (j >= 0) {
                double c = spec.cost_at(t, x, j);
                for (int i = 0; i < n; ++i)
                    x[static_cast<std::size_t>(i)] +=
                        spec.impulses[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
                stat.total_cost += c;
                ++stat.impulses;
                stat.events.push_back({t, j, c});
            }
        }

        running += h * spec.f_at(t, x);

        // Euler-Maruyama increment.
        spec.drift_at(t, x, b);
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < d; ++k)
                s[static_cast<std::size_t>(i * d + k)] = spec.sigma(i, k).eval({t, x, {}});
        for (int k = 0; k < d; ++k) z[static_cast<std::size_t>(k)] = sign * rng.gaussian();
        const double sqrt_h = std::sqrt(h);
        for (int i = 0; i < n; ++i) {
            double diff = 0.0;
            for (int k = 0; k < d; ++k)
                diff += s[static_cast<std::size_t>(i * d + k)] * z[static_cast<std::size_t>(k)];
            x[static_cast<std::size_t>(i)] += b[static_cast<std::size_t>(i)] * h + sqrt_h * diff;
        }
        t += h;

        if (ctx.trust && !ctx.trust->contains(x)) stat.left_trust_region = true;
    }

    stat.running_reward = running;
    stat.terminal_reward = spec.g_at(x);
    stat.gain = running - stat.total_cost + stat.terminal_reward;
    return stat;
}

SimReport run(const SimContext& ctx) {
    const SimConfig& cfg = ctx.cfg;
    if (cfg.paths < 1) throw ConfigError("path count must be >= 1");
    if (!(cfg.dt > 0.0)) throw ConfigError("simulation step must be > 0");
    if (static_cast<int>(cfg.x0.size()) != ctx.spec.dim)
        throw ConfigError("x0 must have one component per state dimension");
    if (cfg.t0 < 0.0 || cfg.t0 > ctx.spec.horizon)
        throw ConfigError("t0 must lie in [0, T]");

    SimReport report;
    report.paths = cfg.paths;
    report.seed = cfg.seed;
    report.rng = Philox::algorithm();
    report.per_path.resize(static_cast<std::size_t>(cfg.paths));

    parallel_for(static_cast<std::size_t>(cfg.paths), cfg.threads, [&](std::size_t p) {
        report.per_path[p] = run_path(ctx, static_cast<long>(p));
    });

    // Sequential reduction in path order: bit-stable regardless of threads.
    double sum = 0.0, sumsq = 0.0, cost = 0.0;
    int max_impulses = 0;
    for (const PathStat& stat : report.per_path) {
        sum += stat.gain;
        sumsq += stat.gain * stat.gain;
        cost += stat.total_cost;
        max_impulses = std::max(max_impulses, stat.impulses);
        if (stat.left_trust_region) ++report.flagged;
    }
    const double np = static_cast<double>(cfg.paths);
    report.mean = sum / np;
    double var = std::max(0.0, sumsq / np - report.mean * report.mean);
    report.std_error = cfg.paths > 1 ? std::sqrt(var / (np - 1.0)) : 0.0;
    report.mean_cost = cost / np;
    report.impulse_histogram.assign(static_cast<std::size_t>(max_impulses) + 1, 0);
    for (const PathStat& stat : report.per_path)
        ++report.impulse_histogram[static_cast<std::size_t>(stat.impulses)];
    return report;
}

} // namespace

SimReport simulate_paths(const ProblemSpec& spec, const Policy& policy, const GridSpec& grid,
                         const SimConfig& cfg) {
    SimContext ctx{spec, &policy, &grid, cfg,
                   cfg.impulse_cap > 0 ? cfg.impulse_cap : default_impulse_cap(spec, grid),
                   TrustRegion::from(spec, grid)};
    return run(ctx);
}

SimReport feynman_kac_v0(const ProblemSpec& spec, const SimConfig& cfg, const GridSpec* grid) {
    SimContext ctx{spec, nullptr, grid, cfg, 0, std::nullopt};
    if (grid) ctx.trust = TrustRegion::from(spec, *grid);
    return run(ctx);
}

} // namespace iqvi
