#pragma once

// Independent reference computations for the solver tests. These deliberately
// avoid the production solve path: linear systems are solved by dense LU,
// obstacle problems by brute-force active-set enumeration, and deterministic
// instances by exhaustive enumeration of impulse sequences on the lattice.

#include <vector>

#include "iqvi/generator.hpp"
#include "iqvi/grid.hpp"
#include "iqvi/problem.hpp"

namespace oracle {

// Dense solve of A x = b by LU with partial pivoting. A is row-major n x n.
std::vector<double> dense_solve(std::vector<double> a, std::vector<double> b);

// Builds the theta-step matrix A = I - theta_dt * L from a stencil.
std::vector<double> step_matrix(const iqvi::DiscreteGenerator& gen, double theta_dt);

// Solves min(A x - b, x - psi) = 0 exactly by enumerating active sets
// (2^n candidates; n <= ~16). Throws if no assignment satisfies the
// complementarity signs within tol.
std::vector<double> lcp_enumerate(const std::vector<double>& a, const std::vector<double>& b,
                                  const std::vector<double>& psi, double tol = 1e-9);

// Exhaustive dynamic program for sigma = b = 0 instances whose impulses are
// exact node shifts. Enumerates, per time level, every chain of at most
// `chain_depth` impulses (costs paid sequentially, shifts clamped at the
// walls), so the table is the optimum over all such impulse sequences.
struct DeterministicDP {
    std::vector<std::vector<double>> value;     // [level][node]
    std::vector<std::vector<int>> action;       // argmax impulse or -1, per level/node
};

DeterministicDP deterministic_dp(const iqvi::ProblemSpec& spec, const iqvi::GridSpec& grid,
                                 double theta, int chain_depth, double contact_tol);

// Independent cascade for small stochastic lattices: unconstrained steps by
// dense LU, obstacle steps by LCP enumeration, intervention by exact node
// shifts (impulses must be multiples of the spacing). Runs until the
// sup-norm increment drops below tol.
std::vector<std::vector<double>> lcp_cascade(const iqvi::ProblemSpec& spec,
                                             const iqvi::GridSpec& grid, double theta,
                                             double tol, int max_iters);

} // namespace oracle
