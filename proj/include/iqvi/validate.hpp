#pragma once

#include <string>
#include <vector>

#include "iqvi/grid.hpp"
#include "iqvi/problem.hpp"

namespace iqvi {

/// Outcome of one sampled assumption check. `worst` is the largest violation
/// found (<= 0 means the inequality held everywhere); the where_* fields are
/// the witness location of that worst sample.
struct CheckResult {
    std::string name;
    bool pass = true;
    double worst = 0.0;
    double where_t = 0.0;
    std::vector<double> where_x;
    int where_xi = -1; // impulse index when relevant
    std::string note;

    std::string describe() const;
};

/// Sampled verification of the standing assumptions on a lattice. Regularity
/// constants are estimated, never proven; a fail is a report, not an abort.
struct ValidationReport {
    CheckResult h1_coefficients; // b, sigma finite on the lattice
    CheckResult h2_rewards;      // f, g finite on the lattice
    CheckResult h3_cost_floor;   // inf c >= k
    CheckResult h3_subadditive;  // c(xi1+xi2) <= c(xi1) + c(xi2), sums inside U
    CheckResult h4_terminal;     // sup_xi [g(x+xi) - c(T,x,xi)] <= g(x)

    double lipschitz_estimate = 0.0; // divided-difference estimate for b and sigma
    double sup_drift = 0.0;
    double sup_diffusion = 0.0;
    double sup_running = 0.0;
    double sup_terminal = 0.0;

    bool all_pass() const;
    std::string summary() const;
};

/// Checks H1-H4 on every lattice node with slack `tol`; never mutates or
/// throws (coefficient evaluation errors are reported as failures with
/// their location).
ValidationReport validate_problem(const ProblemSpec& spec, const GridSpec& grid, double tol);

} // namespace iqvi
