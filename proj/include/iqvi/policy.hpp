#pragma once

#include <cstdint>
#include <vector>

#include "iqvi/solver.hpp"

namespace iqvi {

/// Feedback decision table extracted from a converged value field: per time
/// level and node, continue or apply a specific impulse. The terminal level
/// is always Continue. `tie_count` flags nodes with multiple maximizers.
struct Policy {
    int time_levels = 0; // M + 1
    std::size_t nodes = 0;
    double contact_tol = 0.0;
    std::vector<std::int32_t> impulse_index; // time-major; -1 = continue
    std::vector<std::int32_t> tie_count;

    std::int32_t at(int level, std::size_t node) const {
        return impulse_index[static_cast<std::size_t>(level) * nodes + node];
    }
    bool is_impulse(int level, std::size_t node) const { return at(level, node) >= 0; }
};

/// Labels a node Impulse(argmax) when V - M V <= contact_tol, Continue
/// otherwise. Ties among maximizing impulses break to the lowest index.
Policy extract_policy(const SolveResult& result, const ProblemSpec& spec, const GridSpec& grid,
                      double contact_tol);

} // namespace iqvi
