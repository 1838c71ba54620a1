#include "iqvi/intervention.hpp"

#include <cmath>

#include "iqvi/util.hpp"

namespace iqvi {

InterventionField intervention_operator_full(const ValueField& v, double t,
                                             const ProblemSpec& spec, const GridSpec& grid,
                                             int threads) {
    const int n = grid.dim();
    const std::size_t count = grid.node_count();
    const int nxi = static_cast<int>(spec.impulses.size());

    InterventionField out;
    out.values.time_index = v.time_index;
    out.values.values.resize(count);
    out.argmax.assign(count, 0);
    out.tie_count.assign(count, 1);

    parallel_for(count, threads, [&](std::size_t node) {
        std::vector<double> x(static_cast<std::size_t>(n));
        std::vector<double> target(static_cast<std::size_t>(n));
        std::vector<double> candidate(static_cast<std::size_t>(nxi));
        grid.coords(node, x);
        for (int j = 0; j < nxi; ++j) {
            for (int r = 0; r < n; ++r)
                target[static_cast<std::size_t>(r)] =
                    x[static_cast<std::size_t>(r)] +
                    spec.impulses[static_cast<std::size_t>(j)][static_cast<std::size_t>(r)];
            grid.clamp(target);
            candidate[static_cast<std::size_t>(j)] =
                interpolate(v, target, grid) - spec.cost_at(t, x, j);
        }
        // Lowest index attaining the max wins; near-ties are counted so the
        // policy can flag ambiguous maximizers.
        int best_j = 0;
        for (int j = 1; j < nxi; ++j)
            if (candidate[static_cast<std::size_t>(j)] > candidate[static_cast<std::size_t>(best_j)])
                best_j = j;
        const double best = candidate[static_cast<std::size_t>(best_j)];
        const double tie_tol = 1e-12 * (1.0 + std::fabs(best));
        int ties = 0;
        for (int j = 0; j < nxi; ++j)
            if (candidate[static_cast<std::size_t>(j)] >= best - tie_tol) ++ties;

        out.values.values[node] = best;
        out.argmax[node] = best_j;
        out.tie_count[node] = ties;
    });
    return out;
}

ValueField intervention_operator(const ValueField& v, double t, const ProblemSpec& spec,
                                 const GridSpec& grid, int threads) {
    return intervention_operator_full(v, t, spec, grid, threads).values;
}

} // namespace iqvi
