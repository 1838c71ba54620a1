#pragma once

#include <optional>
#include <string>
#include <vector>

#include "iqvi/generator.hpp"
#include "iqvi/grid.hpp"
#include "iqvi/intervention.hpp"
#include "iqvi/problem.hpp"

namespace iqvi {

/// Backward theta-scheme and cascade controls. theta = 1 is fully implicit;
/// theta < 1 activates a CFL guard that errors when the explicit part is
/// unstable on the given grid.
struct SolveConfig {
    double theta = 1.0;
    double inner_tol = 1e-12;   // obstacle-step complementarity residual
    double lin_tol = 1e-12;     // unconstrained-step residual
    double cascade_tol = 1e-6;  // eps_casc, sup-norm increment stop
    int max_cascade = 25;       // n_max
    int max_sweeps = 100000;    // relaxation sweeps per time step
    double relax = 1.0;         // damping factor of the point relaxation
    int threads = 1;            // workers for the per-node obstacle evaluation
};

/// Initial iterate of the cascade: the at-most-zero-impulses value, or the
/// constant upper bound T*||f|| + ||g|| (used by the uniqueness squeeze).
enum class CascadeStart { FromV0, FromUpperBound };

/// Value fields per time level plus the cascade trace.
struct SolveResult {
    std::vector<ValueField> levels; // 0..M
    std::vector<double> increments; // ||V^n - V^{n-1}||_inf per iteration
    std::vector<double> min_increments; // most negative nodewise increment per iteration
    int n_used = 0;
    bool converged = true;

    double sup_norm() const;
};

/// One backward theta-step of dV/dt + L V + f = 0 from the slice at t + dt
/// down to t, solved by damped point relaxation.
/// Throws SolverError on sweep exhaustion or CFL violation.
ValueField solve_pde_step(const ValueField& v_next, double t, const ProblemSpec& spec,
                          const GridSpec& grid, const SolveConfig& cfg);

/// One backward step of the obstacle problem
/// min{ -dV/dt - L V - f, V - obstacle } = 0 with the obstacle frozen at t,
/// solved by projected relaxation. The result is >= obstacle everywhere.
ValueField solve_obstacle_step(const ValueField& v_next, const ValueField& obstacle, double t,
                               const ProblemSpec& spec, const GridSpec& grid,
                               const SolveConfig& cfg);

/// No-impulse value: plain backward sweep from V(T) = g.
SolveResult solve_v0(const ProblemSpec& spec, const GridSpec& grid, const SolveConfig& cfg);

/// Iterated optimal stopping: V^0, then obstacle sweeps against M V^{n-1}
/// until the sup-norm increment drops below cascade_tol. Hitting max_cascade
/// flags the result unconverged instead of throwing.
SolveResult iterated_optimal_stopping(const ProblemSpec& spec, const GridSpec& grid,
                                      const SolveConfig& cfg,
                                      CascadeStart start = CascadeStart::FromV0);

/// Discrete residuals of the converged inequality system per time level
/// m < M: pde = -dV/dt - L V - f (theta-blended, scaled by 1/dt),
/// obstacle = V - M V, complementarity = min of the two.
struct ResidualReport {
    std::vector<ValueField> pde;
    std::vector<ValueField> obstacle;
    std::vector<ValueField> complementarity;
    double sup_interior = 0.0; // |complementarity| over non-wall nodes
    double sup_trust = 0.0;    // |complementarity| over trust-region nodes
};

ResidualReport qvi_residuals(const SolveResult& result, const ProblemSpec& spec,
                             const GridSpec& grid, const SolveConfig& cfg);

/// Re-solves the QVI on [0, t_r] using V(t_r, .) as terminal data and
/// returns ||V_restart(0,.) - V(0,.)||_inf (the dynamic-programming restart
/// discrepancy; zero up to scheme consistency).
double dpp_restart_check(const SolveResult& result, int r_index, const ProblemSpec& spec,
                         const GridSpec& grid, const SolveConfig& cfg);

/// Gamma(t,x) = exp(t) V(t,x) per level, and its exact inverse.
SolveResult exp_transform(const SolveResult& result, const ProblemSpec& spec,
                          const GridSpec& grid);
SolveResult exp_transform_inverse(const SolveResult& result, const ProblemSpec& spec,
                                  const GridSpec& grid);

} // namespace iqvi
