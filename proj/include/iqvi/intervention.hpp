#pragma once

#include <cstdint>
#include <vector>

#include "iqvi/grid.hpp"
#include "iqvi/problem.hpp"

namespace iqvi {

/// Discrete intervention operator M V(t,x) = max_xi [V(t, x+xi) - c(t,x,xi)],
/// with x+xi clamped into the box and V read by multilinear interpolation.
struct InterventionField {
    ValueField values;
    std::vector<std::int32_t> argmax;   // impulse index attaining the max
    std::vector<std::int32_t> tie_count; // maximizers within tie tolerance
};

/// Full evaluation with argmax bookkeeping (ties broken by lowest index).
/// Nodes are independent, so `threads` workers never change the result.
InterventionField intervention_operator_full(const ValueField& v, double t,
                                             const ProblemSpec& spec, const GridSpec& grid,
                                             int threads = 1);

/// Value-only convenience wrapper.
ValueField intervention_operator(const ValueField& v, double t, const ProblemSpec& spec,
                                 const GridSpec& grid, int threads = 1);

} // namespace iqvi
