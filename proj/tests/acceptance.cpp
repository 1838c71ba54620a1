// Acceptance suite: one line per criterion, nonzero exit when any fails.
// Tolerances are fixed here, not tuned at run time.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <vector>

#include "iqvi/artifacts.hpp"
#include "iqvi/montecarlo.hpp"
#include "iqvi/policy.hpp"
#include "iqvi/solver.hpp"
#include "iqvi/util.hpp"
#include "iqvi/validate.hpp"
#include "oracle.hpp"

using namespace iqvi;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
    std::cout << (pass ? "[PASS]" : "[FAIL]") << " criterion " << criterion << ": " << detail
              << std::endl;
    if (!pass) ++failures;
}

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string instances_dir() {
    const char* dir = std::getenv("IMPULSE_QVI_INSTANCES");
    if (!dir) {
        std::cerr << "IMPULSE_QVI_INSTANCES not set\n";
        std::exit(2);
    }
    return dir;
}

fs::path tmp_dir() {
    const char* dir = std::getenv("IMPULSE_QVI_TMP");
    fs::path p = dir ? fs::path(dir) / "acceptance" : fs::temp_directory_path() / "iqvi_acceptance";
    fs::create_directories(p);
    return p;
}

// The criterion instance: hat reward, flat cost 0.1 (deliberately cheaper
// than the H4-compliant shipped config; the cascade checks run on it
// as-is).
ProblemSpec criterion_hat() {
    ProblemSpec spec;
    spec.dim = 1;
    spec.noise_dim = 1;
    spec.horizon = 1.0;
    spec.drift = {Expr::parse("0")};
    spec.diffusion = {Expr::parse("0.5")};
    spec.running_reward = Expr::parse("0");
    spec.terminal_reward = Expr::parse("max0(1 - abs(x0))");
    spec.cost = Expr::parse("0.1");
    spec.cost_floor = 0.1;
    spec.impulses = {{-0.5}, {0.5}};
    return spec;
}

GridSpec criterion_hat_grid() { return GridSpec{{-2.0}, {2.0}, {201}, 100}; }

SolveConfig hat_config() {
    SolveConfig cfg;
    cfg.cascade_tol = 1e-6;
    cfg.max_cascade = 10;
    cfg.lin_tol = 1e-13;
    cfg.inner_tol = 1e-13;
    return cfg;
}

struct ShippedInstance {
    std::string name;
    ProblemSpec spec;
    GridSpec grid;
    std::vector<double> x0;
};

std::vector<ShippedInstance> shipped_instances() {
    std::string dir = instances_dir();
    std::vector<ShippedInstance> out;
    out.push_back({"hat.cfg", load_problem(dir + "/hat.cfg"), GridSpec{{-2}, {2}, {201}, 100},
                   {0.0}});
    out.push_back({"gaussian.cfg", load_problem(dir + "/gaussian.cfg"),
                   GridSpec{{-6}, {6}, {241}, 100}, {0.0}});
    out.push_back({"deterministic.cfg", load_problem(dir + "/deterministic.cfg"),
                   GridSpec{{-2}, {2}, {9}, 8}, {0.0}});
    out.push_back({"twodim.cfg", load_problem(dir + "/twodim.cfg"),
                   GridSpec{{-1.6, -1.6}, {1.6, 1.6}, {17, 17}, 25}, {0.0, 0.0}});
    return out;
}

double value_at(const SolveResult& result, int level, std::span<const double> x,
                const GridSpec& grid) {
    return interpolate(result.levels[static_cast<std::size_t>(level)], x, grid);
}

// --------------------------------------------------------------------------

void criterion_1_and_5_and_6(SolveResult& hat_result_out) {
    ProblemSpec spec = criterion_hat();
    GridSpec grid = criterion_hat_grid();
    SolveConfig cfg = hat_config();

    auto start = Clock::now();
    SolveResult result = iterated_optimal_stopping(spec, grid, cfg);
    double elapsed = seconds_since(start);

    double most_negative = 0.0;
    for (double m : result.min_increments) most_negative = std::min(most_negative, m);
    bool monotone = most_negative >= -1e-10;
    bool converged_fast = result.converged && result.n_used <= 10;
    std::ostringstream detail;
    detail << "cascade monotone (worst increment " << format_double(most_negative)
           << " >= -1e-10), converged in " << result.n_used << " <= 10 iterations, " << elapsed
           << " s < 30 s";
    report(1, monotone && converged_fast && elapsed < 30.0, detail.str());

    ResidualReport residuals = qvi_residuals(result, spec, grid, cfg);
    std::ostringstream d5;
    d5 << "complementarity sup " << format_double(residuals.sup_trust) << " <= 10*eps_casc = "
       << format_double(10.0 * cfg.cascade_tol) << " on interior trust-region nodes";
    report(5, residuals.sup_trust <= 10.0 * cfg.cascade_tol, d5.str());

    double discrepancy = dpp_restart_check(result, grid.time_steps / 2, spec, grid, cfg);
    std::ostringstream d6;
    d6 << "midpoint restart discrepancy " << format_double(discrepancy) << " <= 5*eps_casc = "
       << format_double(5.0 * cfg.cascade_tol);
    report(6, discrepancy <= 5.0 * cfg.cascade_tol, d6.str());

    hat_result_out = std::move(result);
}

void criterion_2() {
    bool pass = true;
    std::ostringstream detail;
    detail << "||V||_inf <= T*||f|| + ||g|| + 1e-6:";
    for (ShippedInstance& inst : shipped_instances()) {
        SolveConfig cfg;
        SolveResult result = iterated_optimal_stopping(inst.spec, inst.grid, cfg);
        double bound = value_bound(inst.spec, inst.grid);
        double sup = result.sup_norm();
        bool ok = sup <= bound + 1e-6 && result.converged;
        pass = pass && ok;
        detail << " " << inst.name << " (" << format_double(sup) << " vs " << format_double(bound)
               << (ok ? ")" : ") VIOLATED");
    }
    report(2, pass, detail.str());
}

void criterion_3() {
    auto start = Clock::now();
    ProblemSpec spec = load_problem(instances_dir() + "/gaussian.cfg");
    GridSpec grid{{-6.0}, {6.0}, {241}, 100};
    SolveResult v0 = solve_v0(spec, grid, SolveConfig{});
    double x0[1] = {0.0};
    double solver_value = value_at(v0, 0, std::span<const double>(x0, 1), grid);

    SimConfig sim;
    sim.x0 = {0.0};
    sim.paths = 100000;
    sim.dt = 0.01;
    sim.seed = 20260810;
    SimReport mc = feynman_kac_v0(spec, sim, &grid);
    double elapsed = seconds_since(start);

    bool close_to_exact = std::fabs(solver_value - 1.0) <= 0.02;
    bool close_to_mc = std::fabs(solver_value - mc.mean) <= 3.0 * mc.std_error;
    std::ostringstream detail;
    detail << "V0(0,0) = " << format_double(solver_value) << " (closed form 1.0, within 2%), MC "
           << format_double(mc.mean) << " +/- " << format_double(mc.std_error)
           << " with 1e5 paths (within 3 stderr), " << elapsed << " s < 60 s";
    report(3, close_to_exact && close_to_mc && elapsed < 60.0, detail.str());
}

void criterion_4() {
    auto start = Clock::now();
    ProblemSpec spec = load_problem(instances_dir() + "/deterministic.cfg");
    GridSpec grid{{-2.0}, {2.0}, {9}, 8};
    SolveConfig cfg;
    cfg.lin_tol = 1e-13;
    cfg.inner_tol = 1e-13;
    cfg.cascade_tol = 1e-12;
    cfg.max_cascade = 80;

    SolveResult result = iterated_optimal_stopping(spec, grid, cfg);
    const double contact_tol = 1e-9;
    Policy policy = extract_policy(result, spec, grid, contact_tol);

    oracle::DeterministicDP dp = oracle::deterministic_dp(spec, grid, cfg.theta, 8, contact_tol);
    oracle::DeterministicDP deeper = oracle::deterministic_dp(spec, grid, cfg.theta, 9, contact_tol);

    double value_gap = 0.0;
    double closure_gap = 0.0;
    bool policy_match = true;
    for (int m = 0; m <= grid.time_steps; ++m) {
        for (int i = 0; i < grid.nodes[0]; ++i) {
            double solver = result.levels[static_cast<std::size_t>(m)].values[static_cast<std::size_t>(i)];
            double reference = dp.value[static_cast<std::size_t>(m)][static_cast<std::size_t>(i)];
            value_gap = std::max(value_gap, std::fabs(solver - reference));
            closure_gap = std::max(closure_gap,
                                   std::fabs(reference - deeper.value[static_cast<std::size_t>(m)]
                                                             [static_cast<std::size_t>(i)]));
            if (m < grid.time_steps &&
                policy.at(m, static_cast<std::size_t>(i)) !=
                    dp.action[static_cast<std::size_t>(m)][static_cast<std::size_t>(i)])
                policy_match = false;
        }
    }
    double elapsed = seconds_since(start);
    std::ostringstream detail;
    detail << "value gap " << format_double(value_gap) << " <= 1e-8 vs exhaustive enumeration "
           << "(chain-depth stable to " << format_double(closure_gap) << "), policy "
           << (policy_match ? "identical" : "DIFFERS") << ", " << elapsed << " s < 1 s";
    report(4, value_gap <= 1e-8 && closure_gap == 0.0 && policy_match && elapsed < 1.0,
           detail.str());
}

void criterion_7() {
    ProblemSpec base = criterion_hat();
    ProblemSpec richer = criterion_hat();
    richer.running_reward = Expr::parse("0.1");
    richer.terminal_reward = Expr::parse("max0(1 - abs(x0)) + 0.1");
    GridSpec grid{{-2.0}, {2.0}, {201}, 100};
    SolveConfig cfg = hat_config();
    SolveResult v1 = iterated_optimal_stopping(base, grid, cfg);
    SolveResult v2 = iterated_optimal_stopping(richer, grid, cfg);
    double worst = -1e300;
    for (std::size_t m = 0; m < v1.levels.size(); ++m)
        for (std::size_t i = 0; i < v1.levels[m].values.size(); ++i)
            worst = std::max(worst, v1.levels[m].values[i] - v2.levels[m].values[i]);
    std::ostringstream detail;
    detail << "ordering for (f,g) vs (f+0.1, g+0.1): max(V1 - V2) = " << format_double(worst)
           << " <= 1e-8 nodewise";
    report(7, worst <= 1e-8, detail.str());
}

void criterion_8(const SolveResult& hat_result) {
    bool pass = true;
    std::ostringstream detail;
    detail << "no-free-lunch (J <= V + 3 stderr + 2% scheme tol):";

    // Shipped instances.
    for (ShippedInstance& inst : shipped_instances()) {
        SolveConfig cfg;
        SolveResult result = iterated_optimal_stopping(inst.spec, inst.grid, cfg);
        ResidualReport residuals = qvi_residuals(result, inst.spec, inst.grid, cfg);
        Policy policy =
            extract_policy(result, inst.spec, inst.grid, std::max(2.0 * residuals.sup_trust, 1e-12));

        SimConfig sim;
        sim.x0 = inst.x0;
        sim.paths = 20000;
        sim.dt = inst.grid.time_step(inst.spec.horizon) / 2.0;
        sim.seed = 424242;
        sim.threads = 4;
        SimReport mc = simulate_paths(inst.spec, policy, inst.grid, sim);

        double v = value_at(result, 0, sim.x0, inst.grid);
        double scheme_tol = 0.02 * std::max(1.0, std::fabs(v));
        bool ok = mc.mean <= v + 3.0 * mc.std_error + scheme_tol;
        pass = pass && ok;
        detail << " " << inst.name << " (J " << format_double(mc.mean) << " vs V "
               << format_double(v) << (ok ? ")" : ") VIOLATED");
    }

    // Near-optimality of the extracted feedback policy on the criterion hat.
    // This instance parks its entire intervention region one step before
    // maturity with chained double-jumps; the one-impulse-per-step simulator
    // needs sub-level stepping to realize those chains.
    {
        ProblemSpec spec = criterion_hat();
        GridSpec grid = criterion_hat_grid();
        SolveConfig cfg = hat_config();
        ResidualReport residuals = qvi_residuals(hat_result, spec, grid, cfg);
        Policy policy =
            extract_policy(hat_result, spec, grid, std::max(2.0 * residuals.sup_trust, 1e-12));

        SimConfig sim;
        sim.x0 = {0.0};
        sim.paths = 100000;
        sim.dt = grid.time_step(spec.horizon) / 4.0;
        sim.seed = 31415926;
        sim.threads = 4;
        SimReport mc = simulate_paths(spec, policy, grid, sim);

        double v = value_at(hat_result, 0, sim.x0, grid);
        double slack = 3.0 * mc.std_error + 0.02 * std::fabs(v);
        bool upper = mc.mean <= v + slack;
        bool near = mc.mean >= v - slack;
        pass = pass && upper && near;
        detail << " | hat policy J " << format_double(mc.mean) << " vs V(0,0) "
               << format_double(v) << " +/- " << format_double(slack)
               << (upper && near ? " (near-optimal)" : " VIOLATED");
    }
    report(8, pass, detail.str());
}

void criterion_9(const SolveResult& hat_result) {
    ProblemSpec spec = criterion_hat();
    GridSpec grid = criterion_hat_grid();
    bool exact = true;
    std::vector<double> x(1);
    for (std::size_t i = 0; i < grid.node_count(); ++i) {
        grid.coords(i, x);
        if (hat_result.levels.back().values[i] != spec.g_at(x)) exact = false;
    }
    SolveConfig cfg = hat_config();
    ResidualReport residuals = qvi_residuals(hat_result, spec, grid, cfg);
    Policy policy =
        extract_policy(hat_result, spec, grid, std::max(2.0 * residuals.sup_trust, 1e-12));
    bool no_terminal_impulse = true;
    for (std::size_t i = 0; i < policy.nodes; ++i)
        if (policy.is_impulse(policy.time_levels - 1, i)) no_terminal_impulse = false;
    std::ostringstream detail;
    detail << "V(T,.) equals g " << (exact ? "exactly" : "INEXACTLY")
           << ", terminal policy impulse-free: " << (no_terminal_impulse ? "yes" : "NO");
    report(9, exact && no_terminal_impulse, detail.str());
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void criterion_10() {
    const char* bin = std::getenv("IMPULSE_QVI_BIN");
    if (!bin) {
        report(10, false, "IMPULSE_QVI_BIN not set; cannot drive the CLI");
        return;
    }
    fs::path work = tmp_dir();
    fs::path out1 = work / "det_run1";
    fs::path out2 = work / "det_run2";
    fs::remove_all(out1);
    fs::remove_all(out2);

    std::string cfg = instances_dir() + "/hat.cfg";
    std::string grid_flags = " --grid-lo -2 --grid-hi 2 --nodes 101 --time-steps 50";
    auto run = [&](const std::string& args) {
        std::string cmd = std::string(bin) + " " + args + " > " + (work / "log.txt").string() +
                          " 2>&1";
        return std::system(cmd.c_str()) == 0;
    };

    bool ok = true;
    for (const fs::path& out : {out1, out2}) {
        ok = ok && run("solve " + cfg + grid_flags + " --out " + out.string());
        ok = ok && run("policy --in " + out.string());
        ok = ok && run("simulate --in " + out.string() +
                       " --paths 5000 --sim-dt 0.02 --seed 99 --x0 0");
    }
    bool identical = true;
    for (const char* name :
         {"value.csv", "residuals.csv", "policy.csv", "sim_paths.csv", "sim_summary.txt"}) {
        if (slurp(out1 / name) != slurp(out2 / name)) identical = false;
    }
    std::ostringstream detail;
    detail << "repeated CLI runs with identical configs and seeds produce byte-identical "
              "artifacts: "
           << (identical ? "yes" : "NO") << (ok ? "" : " (command failure)");
    report(10, ok && identical, detail.str());
}

} // namespace

int main() {
    std::cout << "impulse_qvi acceptance suite\n";
    auto start = Clock::now();

    SolveResult hat_result;
    criterion_1_and_5_and_6(hat_result);
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_7();
    criterion_8(hat_result);
    criterion_9(hat_result);
    criterion_10();

    std::cout << (failures == 0 ? "ALL CRITERIA PASS" : "FAILURES PRESENT") << " ("
              << seconds_since(start) << " s total)\n";
    return failures == 0 ? 0 : 1;
}
