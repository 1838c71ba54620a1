#include "iqvi/policy.hpp"

namespace iqvi {

Policy extract_policy(const SolveResult& result, const ProblemSpec& spec, const GridSpec& grid,
                      double contact_tol) {
    const double dt = grid.time_step(spec.horizon);
    const std::size_t count = grid.node_count();
    const int levels = static_cast<int>(result.levels.size());

    Policy policy;
    policy.time_levels = levels;
    policy.nodes = count;
    policy.contact_tol = contact_tol;
    policy.impulse_index.assign(static_cast<std::size_t>(levels) * count, -1);
    policy.tie_count.assign(static_cast<std::size_t>(levels) * count, 0);

    // Terminal level stays Continue (no impulse at maturity).
    for (int m = 0; m + 1 < levels; ++m) {
        const ValueField& vm = result.levels[static_cast<std::size_t>(m)];
        InterventionField mv = intervention_operator_full(vm, dt * m, spec, grid);
        for (std::size_t i = 0; i < count; ++i) {
            std::size_t at = static_cast<std::size_t>(m) * count + i;
            if (vm.values[i] - mv.values.values[i] <= contact_tol) {
                policy.impulse_index[at] = mv.argmax[i];
                policy.tie_count[at] = mv.tie_count[i];
            }
        }
    }
    return policy;
}

} // namespace iqvi
