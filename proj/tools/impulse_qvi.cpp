// Command-line front end: validate / solve / policy / simulate / compare.
// Exit codes: 0 success, 1 domain failure (validation, convergence),
// 2 usage or config error.

#include <CLI11.hpp>

#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "iqvi/artifacts.hpp"
#include "iqvi/errors.hpp"
#include "iqvi/montecarlo.hpp"
#include "iqvi/policy.hpp"
#include "iqvi/solver.hpp"
#include "iqvi/util.hpp"
#include "iqvi/validate.hpp"

namespace fs = std::filesystem;
using namespace iqvi;

namespace {

constexpr const char* kToolVersion = "0.1.0";

std::vector<double> parse_double_list(const std::string& text, const std::string& flag) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t comma = text.find(',', pos);
        std::string item = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        char* end = nullptr;
        double v = std::strtod(item.c_str(), &end);
        while (end && *end == ' ') ++end;
        if (end == item.c_str() || (end && *end))
            throw ConfigError(flag + ": malformed number '" + item + "'");
        out.push_back(v);
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

std::vector<int> parse_int_list(const std::string& text, const std::string& flag) {
    std::vector<int> out;
    for (double v : parse_double_list(text, flag)) {
        int i = static_cast<int>(v);
        if (static_cast<double>(i) != v) throw ConfigError(flag + ": expected integers");
        out.push_back(i);
    }
    return out;
}

struct GridFlags {
    std::string lo, hi, nodes;
    int time_steps = 0;

    GridSpec build(int dim) const {
        GridSpec grid;
        grid.lower = parse_double_list(lo, "--grid-lo");
        grid.upper = parse_double_list(hi, "--grid-hi");
        grid.nodes = parse_int_list(nodes, "--nodes");
        grid.time_steps = time_steps;
        grid.validate(dim);
        return grid;
    }
};

void add_grid_flags(CLI::App* cmd, GridFlags& flags) {
    cmd->add_option("--grid-lo", flags.lo, "lower box corner, comma-separated")->required();
    cmd->add_option("--grid-hi", flags.hi, "upper box corner, comma-separated")->required();
    cmd->add_option("--nodes", flags.nodes, "nodes per axis, comma-separated")->required();
    cmd->add_option("--time-steps", flags.time_steps, "number of backward time steps")
        ->required()
        ->check(CLI::PositiveNumber);
}

int resolve_threads(int flag_value) {
    if (flag_value > 0) return flag_value;
    if (const char* env = std::getenv("IMPULSE_QVI_THREADS")) {
        int v = std::atoi(env);
        if (v > 0) return v;
    }
    return 1;
}

std::string utc_now() {
    std::time_t now = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    return buf;
}

std::string solve_param_blob(const GridSpec& grid, const SolveConfig& cfg) {
    std::ostringstream blob;
    blob << "solve|lo=" << join_doubles(grid.lower) << "|hi=" << join_doubles(grid.upper)
         << "|nodes=";
    for (std::size_t i = 0; i < grid.nodes.size(); ++i)
        blob << (i ? "," : "") << grid.nodes[i];
    blob << "|steps=" << grid.time_steps << "|theta=" << format_double(cfg.theta)
         << "|cascade_tol=" << format_double(cfg.cascade_tol) << "|cascade_max=" << cfg.max_cascade
         << "|inner_tol=" << format_double(cfg.inner_tol)
         << "|lin_tol=" << format_double(cfg.lin_tol) << "|max_sweeps=" << cfg.max_sweeps
         << "|relax=" << format_double(cfg.relax);
    return blob.str();
}

struct LoadedRun {
    ProblemSpec spec;
    GridSpec grid;
    SolveConfig cfg;
    SolveResult result;
    Manifest manifest;
    std::string hash;
    std::string dir;
};

LoadedRun load_run(const std::string& dir) {
    LoadedRun run;
    run.dir = dir;
    run.manifest = read_manifest(dir + "/manifest.txt");
    std::string problem_file = run.manifest.get("problem_file");
    std::string text = read_file(problem_file);
    if (hex64(fnv1a64(text)) != run.manifest.get("problem_hash"))
        throw IoError("problem file '" + problem_file +
                      "' changed since the solve (hash mismatch)");
    run.spec = parse_problem(text);

    run.grid.lower = run.manifest.get_vector("grid_lo");
    run.grid.upper = run.manifest.get_vector("grid_hi");
    run.grid.nodes = run.manifest.get_int_vector("grid_nodes");
    run.grid.time_steps = static_cast<int>(run.manifest.get_int("time_steps"));
    run.grid.validate(run.spec.dim);

    run.cfg.theta = run.manifest.get_double("theta");
    run.cfg.cascade_tol = run.manifest.get_double("cascade_tol");
    run.cfg.max_cascade = static_cast<int>(run.manifest.get_int("cascade_max"));
    run.cfg.inner_tol = run.manifest.get_double("inner_tol");
    run.cfg.lin_tol = run.manifest.get_double("lin_tol");
    run.cfg.max_sweeps = static_cast<int>(run.manifest.get_int("max_sweeps"));
    run.cfg.relax = run.manifest.get_double("relax");

    run.hash = run.manifest.get("run_hash");
    std::string file_hash;
    run.result.levels = read_value_csv(dir + "/value.csv", run.spec, run.grid, &file_hash);
    if (file_hash != run.hash)
        throw IoError("value.csv run hash does not match the manifest in '" + dir + "'");
    run.result.n_used = static_cast<int>(run.manifest.get_int("cascade_n_used"));
    run.result.converged = run.manifest.get_int("cascade_converged") != 0;
    return run;
}

// ---------------------------------------------------------------------------

int cmd_validate(const std::string& config_path, const GridFlags& grid_flags, double tol) {
    ProblemSpec spec = load_problem(config_path);
    GridSpec grid = grid_flags.build(spec.dim);
    ValidationReport report = validate_problem(spec, grid, tol);
    std::cout << report.summary();
    return report.all_pass() ? 0 : 1;
}

int cmd_solve(const std::string& config_path, const GridFlags& grid_flags, SolveConfig cfg,
              const std::string& out_dir, bool force, double val_tol) {
    std::string text = read_file(config_path);
    ProblemSpec spec = parse_problem(text);
    GridSpec grid = grid_flags.build(spec.dim);

    ValidationReport report = validate_problem(spec, grid, val_tol);
    std::cout << report.summary();
    if (!report.all_pass()) {
        if (!force) {
            std::cerr << "validation failed; rerun with --force to solve anyway\n";
            return 1;
        }
        std::cout << "continuing despite validation failures (--force)\n";
    }

    SolveResult result = iterated_optimal_stopping(spec, grid, cfg);
    ResidualReport residuals = qvi_residuals(result, spec, grid, cfg);
    TrustRegion trust = TrustRegion::from(spec, grid);

    fs::create_directories(out_dir);
    std::string hash = run_hash(text, solve_param_blob(grid, cfg));

    Manifest manifest;
    manifest.set("tool_version", kToolVersion);
    manifest.set("command", "solve");
    manifest.set("run_hash", hash);
    manifest.set("problem_file", config_path);
    manifest.set("problem_hash", hex64(fnv1a64(text)));
    manifest.set("grid_lo", join_doubles(grid.lower));
    manifest.set("grid_hi", join_doubles(grid.upper));
    {
        std::string nodes;
        for (std::size_t i = 0; i < grid.nodes.size(); ++i)
            nodes += (i ? "," : "") + std::to_string(grid.nodes[i]);
        manifest.set("grid_nodes", nodes);
    }
    manifest.set_int("time_steps", grid.time_steps);
    manifest.set_double("theta", cfg.theta);
    manifest.set_double("cascade_tol", cfg.cascade_tol);
    manifest.set_int("cascade_max", cfg.max_cascade);
    manifest.set_double("inner_tol", cfg.inner_tol);
    manifest.set_double("lin_tol", cfg.lin_tol);
    manifest.set_int("max_sweeps", cfg.max_sweeps);
    manifest.set_double("relax", cfg.relax);
    manifest.set_int("cascade_n_used", result.n_used);
    manifest.set_int("cascade_converged", result.converged ? 1 : 0);
    manifest.set("cascade_increments", join_doubles(result.increments));
    manifest.set_double("residual_sup_trust", residuals.sup_trust);
    manifest.set_double("residual_sup_interior", residuals.sup_interior);
    manifest.set("trust_lo", join_doubles(trust.lower));
    manifest.set("trust_hi", join_doubles(trust.upper));
    manifest.set_double("value_bound_sampled", value_bound(spec, grid));
    manifest.set_double("validation_tol", val_tol);
    manifest.set_int("validation_pass", report.all_pass() ? 1 : 0);
    manifest.set("created_utc", utc_now());

    write_manifest(out_dir + "/manifest.txt", manifest);
    write_value_csv(out_dir + "/value.csv", result, spec, grid, hash);
    write_residual_csv(out_dir + "/residuals.csv", residuals, spec, grid, hash);

    std::cout << "cascade iterations: " << result.n_used
              << (result.converged ? "" : " (NOT converged)") << "\n";
    std::cout << "residual sup (trust region): " << format_double(residuals.sup_trust) << "\n";
    std::cout << "trust region: [" << join_doubles(trust.lower) << "] .. ["
              << join_doubles(trust.upper) << "]\n";
    std::cout << "artifacts written to " << out_dir << "\n";
    if (!result.converged) {
        std::cerr << "cascade did not converge within " << cfg.max_cascade << " iterations\n";
        return 1;
    }
    return 0;
}

int cmd_policy(const std::string& in_dir, std::string out_dir, double contact_tol) {
    LoadedRun run = load_run(in_dir);
    if (out_dir.empty()) out_dir = in_dir;

    if (contact_tol < 0.0) {
        double residual = run.manifest.get_double("residual_sup_trust");
        contact_tol = std::max(2.0 * residual, 1e-12);
    }
    Policy policy = extract_policy(run.result, run.spec, run.grid, contact_tol);

    fs::create_directories(out_dir);
    write_policy_csv(out_dir + "/policy.csv", policy, run.spec, run.grid, run.hash);

    long impulse_nodes = 0, tie_nodes = 0;
    for (std::size_t i = 0; i < policy.impulse_index.size(); ++i) {
        if (policy.impulse_index[i] >= 0) {
            ++impulse_nodes;
            if (policy.tie_count[i] > 1) ++tie_nodes;
        }
    }
    std::cout << "contact_tol = " << format_double(contact_tol) << "\n";
    std::cout << "impulse nodes: " << impulse_nodes << " (of " << policy.impulse_index.size()
              << "), multi-maximizer nodes: " << tie_nodes << "\n";
    std::cout << "policy written to " << out_dir << "/policy.csv\n";
    return 0;
}

int cmd_simulate(const std::string& in_dir, SimConfig sim, bool no_impulses,
                 const std::string& x0_text) {
    LoadedRun run = load_run(in_dir);

    if (x0_text.empty()) {
        sim.x0.resize(static_cast<std::size_t>(run.spec.dim));
        for (int i = 0; i < run.spec.dim; ++i)
            sim.x0[static_cast<std::size_t>(i)] =
                0.5 * (run.grid.lower[static_cast<std::size_t>(i)] +
                       run.grid.upper[static_cast<std::size_t>(i)]);
    } else {
        sim.x0 = parse_double_list(x0_text, "--x0");
    }

    SimReport report;
    if (no_impulses) {
        report = feynman_kac_v0(run.spec, sim, &run.grid);
    } else {
        if (!fs::exists(in_dir + "/policy.csv"))
            throw IoError("no policy.csv in '" + in_dir + "'; run the policy command first");
        Policy policy = read_policy_csv(in_dir + "/policy.csv", run.spec, run.grid);
        report = simulate_paths(run.spec, policy, run.grid, sim);
    }

    std::ostringstream blob;
    blob << "simulate|seed=" << sim.seed << "|paths=" << sim.paths
         << "|dt=" << format_double(sim.dt) << "|x0=" << join_doubles(sim.x0)
         << "|t0=" << format_double(sim.t0) << "|cap=" << sim.impulse_cap
         << "|anti=" << (sim.antithetic ? 1 : 0) << "|noimp=" << (no_impulses ? 1 : 0) << "|"
         << run.hash;
    std::string hash = run_hash("", blob.str());

    write_sim_csv(in_dir + "/sim_paths.csv", report, hash);
    write_sim_summary(in_dir + "/sim_summary.txt", report, sim, hash);

    // Solver value at the launch point, for eyeballing agreement.
    int level = static_cast<int>(std::lround(sim.t0 / run.grid.time_step(run.spec.horizon)));
    level = std::min(std::max(level, 0), run.grid.time_steps);
    double reference = interpolate(run.result.levels[static_cast<std::size_t>(level)], sim.x0,
                                   run.grid);

    std::cout << "mean J = " << format_double(report.mean) << " +/- "
              << format_double(report.std_error) << " (" << report.paths << " paths)\n";
    std::cout << "solver V(t0, x0) = " << format_double(reference) << "\n";
    std::cout << "mean cost = " << format_double(report.mean_cost)
              << ", paths outside trust region: " << report.flagged << "\n";
    std::cout << "artifacts written to " << in_dir << "\n";
    return 0;
}

int cmd_compare(const std::string& dir_a, const std::string& dir_b, double tol,
                const std::string& out_dir) {
    LoadedRun a = load_run(dir_a);
    LoadedRun b = load_run(dir_b);

    if (a.grid.lower != b.grid.lower || a.grid.upper != b.grid.upper ||
        a.grid.nodes != b.grid.nodes || a.grid.time_steps != b.grid.time_steps)
        throw ConfigError("cannot compare: runs use different grids");

    double sup = 0.0;
    double worst_ab = 0.0; // max of V_a - V_b (how much A exceeds B)
    double worst_ba = 0.0;
    SolveResult diff;
    diff.levels.resize(a.result.levels.size());
    for (std::size_t m = 0; m < a.result.levels.size(); ++m) {
        diff.levels[m].time_index = static_cast<int>(m);
        diff.levels[m].values.resize(a.result.levels[m].values.size());
        for (std::size_t i = 0; i < a.result.levels[m].values.size(); ++i) {
            double d = a.result.levels[m].values[i] - b.result.levels[m].values[i];
            diff.levels[m].values[i] = d;
            sup = std::max(sup, std::fabs(d));
            worst_ab = std::max(worst_ab, d);
            worst_ba = std::max(worst_ba, -d);
        }
    }

    std::cout << "sup_norm_difference = " << format_double(sup) << "\n";
    std::cout << "ordered_first_le_second: " << (worst_ab <= tol ? "yes" : "no")
              << " (max excess " << format_double(worst_ab) << ")\n";
    std::cout << "ordered_second_le_first: " << (worst_ba <= tol ? "yes" : "no")
              << " (max excess " << format_double(worst_ba) << ")\n";

    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        std::string hash = run_hash("", "compare|" + a.hash + "|" + b.hash);
        write_value_csv(out_dir + "/difference.csv", diff, a.spec, a.grid, hash);
        std::cout << "difference field written to " << out_dir << "/difference.csv\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"impulse_qvi: finite-horizon stochastic impulse control solver"};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);

    // validate
    auto* validate = app.add_subcommand("validate", "check the standing assumptions on a lattice");
    std::string v_config;
    GridFlags v_grid;
    double v_tol = 1e-9;
    validate->add_option("config", v_config, "problem config file")->required();
    add_grid_flags(validate, v_grid);
    validate->add_option("--tol", v_tol, "violation slack");

    // solve
    auto* solve = app.add_subcommand("solve", "solve the impulse-control QVI");
    std::string s_config, s_out = "impulse_out";
    GridFlags s_grid;
    SolveConfig s_cfg;
    bool s_force = false;
    double s_val_tol = 1e-9;
    int s_threads = 0;
    solve->add_option("config", s_config, "problem config file")->required();
    add_grid_flags(solve, s_grid);
    solve->add_option("--theta", s_cfg.theta, "time-stepping blend, 1 = implicit")
        ->check(CLI::Range(0.0, 1.0));
    solve->add_option("--cascade-tol", s_cfg.cascade_tol)->check(CLI::PositiveNumber);
    solve->add_option("--cascade-max", s_cfg.max_cascade)->check(CLI::PositiveNumber);
    solve->add_option("--inner-tol", s_cfg.inner_tol)->check(CLI::PositiveNumber);
    solve->add_option("--lin-tol", s_cfg.lin_tol)->check(CLI::PositiveNumber);
    solve->add_option("--max-sweeps", s_cfg.max_sweeps)->check(CLI::PositiveNumber);
    solve->add_option("--relax", s_cfg.relax)->check(CLI::PositiveNumber);
    solve->add_option("--out", s_out, "artifact directory");
    solve->add_option("--val-tol", s_val_tol, "validation slack");
    solve->add_flag("--force", s_force, "solve even when validation fails");
    solve->add_option("--threads", s_threads, "worker cap (env IMPULSE_QVI_THREADS)");

    // policy
    auto* policy = app.add_subcommand("policy", "extract the intervention policy");
    std::string p_in, p_out;
    double p_contact_tol = -1.0;
    policy->add_option("--in", p_in, "solve artifact directory")->required();
    policy->add_option("--out", p_out, "output directory (default: --in)");
    policy->add_option("--contact-tol", p_contact_tol,
                       "contact tolerance (default: 2x residual bound)");

    // simulate
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo check of the policy");
    std::string m_in, m_x0;
    SimConfig m_sim;
    bool m_no_impulses = false;
    int m_threads = 0;
    simulate->add_option("--in", m_in, "solve artifact directory")->required();
    simulate->add_option("--paths", m_sim.paths)->check(CLI::PositiveNumber);
    simulate->add_option("--sim-dt", m_sim.dt)->check(CLI::PositiveNumber);
    simulate->add_option("--seed", m_sim.seed);
    simulate->add_option("--x0", m_x0, "start state, comma-separated (default: box centre)");
    simulate->add_option("--t0", m_sim.t0, "start time");
    simulate->add_option("--impulse-cap", m_sim.impulse_cap,
                         "max impulses per path (default: cost-bound cap)");
    simulate->add_flag("--antithetic", m_sim.antithetic, "antithetic variates");
    simulate->add_flag("--no-impulses", m_no_impulses, "ignore the policy (Feynman-Kac V0)");
    simulate->add_option("--threads", m_threads, "worker cap (env IMPULSE_QVI_THREADS)");

    // compare
    auto* compare = app.add_subcommand("compare", "difference field of two solve runs");
    std::string c_a, c_b, c_out;
    double c_tol = 1e-8;
    compare->add_option("first", c_a, "first artifact directory")->required();
    compare->add_option("second", c_b, "second artifact directory")->required();
    compare->add_option("--tol", c_tol, "ordering slack");
    compare->add_option("--out", c_out, "directory for the difference field");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (validate->parsed()) return cmd_validate(v_config, v_grid, v_tol);
        if (solve->parsed()) {
            s_cfg.threads = resolve_threads(s_threads);
            return cmd_solve(s_config, s_grid, s_cfg, s_out, s_force, s_val_tol);
        }
        if (policy->parsed()) return cmd_policy(p_in, p_out, p_contact_tol);
        if (simulate->parsed()) {
            m_sim.threads = resolve_threads(m_threads);
            return cmd_simulate(m_in, m_sim, m_no_impulses, m_x0);
        }
        if (compare->parsed()) return cmd_compare(c_a, c_b, c_tol, c_out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ParseError& e) {
        std::cerr << "expression error at offset " << e.offset() << ": " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "artifact error: " << e.what() << "\n";
        return 2;
    } catch (const SolverError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return 1;
    } catch (const EvalError& e) {
        std::cerr << "evaluation error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
