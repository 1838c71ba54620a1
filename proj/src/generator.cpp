#include "iqvi/generator.hpp"

#include <cmath>
#include <map>

#include "iqvi/errors.hpp"
#include "iqvi/util.hpp"

namespace iqvi {

void DiscreteGenerator::apply(std::span<const double> v, std::span<double> out) const {
    for (std::size_t i = 0; i < rows_.size(); ++i) out[i] = apply_at(i, v);
}

double DiscreteGenerator::apply_at(std::size_t node, std::span<const double> v) const {
    const Row& r = rows_[node];
    double acc = r.diag * v[node];
    for (const Entry& e : r.neighbors) acc += e.weight * v[e.index];
    return acc;
}

double DiscreteGenerator::max_offdiag_sum() const {
    double sup = 0.0;
    for (const Row& r : rows_) {
        double s = 0.0;
        for (const Entry& e : r.neighbors) s += e.weight;
        sup = std::max(sup, s);
    }
    return sup;
}

namespace {

// Mirror a node index across the wall: ghost -1 maps to 1, ghost N maps
// to N-2. Requires >= 3 nodes per axis.
int reflect(int idx, int n) {
    if (idx < 0) return -idx;
    if (idx >= n) return 2 * (n - 1) - idx;
    return idx;
}

} // namespace

DiscreteGenerator build_generator(const ProblemSpec& spec, const GridSpec& grid, double t) {
    const int n = grid.dim();
    const std::size_t count = grid.node_count();
    DiscreteGenerator gen(count);

    std::vector<double> x(static_cast<std::size_t>(n));
    std::vector<double> b(static_cast<std::size_t>(n));
    std::vector<double> a(static_cast<std::size_t>(n * n));
    std::vector<int> multi(static_cast<std::size_t>(n));
    std::vector<int> nb(static_cast<std::size_t>(n));
    std::map<std::size_t, double> weights;

    for (std::size_t node = 0; node < count; ++node) {
        grid.coords(node, x);
        grid.unflatten(node, multi);
        spec.drift_at(t, x, b);
        spec.diffusion_matrix_at(t, x, a);
        weights.clear();

        auto add = [&](std::span<const int> offsets, double w) {
            if (w == 0.0) return;
            for (int i = 0; i < n; ++i)
                nb[static_cast<std::size_t>(i)] =
                    reflect(multi[static_cast<std::size_t>(i)] + offsets[static_cast<std::size_t>(i)],
                            grid.nodes[static_cast<std::size_t>(i)]);
            weights[grid.flatten(nb)] += w;
        };

        std::vector<int> off(static_cast<std::size_t>(n), 0);

        for (int i = 0; i < n; ++i) {
            const double hi = grid.spacing(i);
            const double aii = a[static_cast<std::size_t>(i * n + i)];

            // Cross-derivative borrowing: the wide stencil subtracts
            // |a_ij|/(2 h_i h_j) from each axis-i neighbour weight.
            double borrow = 0.0;
            for (int j = 0; j < n; ++j) {
                if (j == i) continue;
                borrow += std::fabs(a[static_cast<std::size_t>(i * n + j)]) / (2.0 * hi * grid.spacing(j));
            }
            double axis_w = aii / (2.0 * hi * hi) - borrow;
            if (axis_w < 0.0)
                throw SolverError(
                    "non-monotone discretization on axis " + std::to_string(i) +
                    ": cross-derivative terms exceed the positive-coefficient budget; "
                    "refine the grid so that a_ii/h_i >= sum_j |a_ij|/h_j");

            off.assign(static_cast<std::size_t>(n), 0);
            off[static_cast<std::size_t>(i)] = 1;
            add(off, axis_w);
            off[static_cast<std::size_t>(i)] = -1;
            add(off, axis_w);

            // Upwinded drift.
            const double bi = b[static_cast<std::size_t>(i)];
            if (bi != 0.0) {
                off.assign(static_cast<std::size_t>(n), 0);
                off[static_cast<std::size_t>(i)] = bi > 0.0 ? 1 : -1;
                add(off, std::fabs(bi) / hi);
            }
        }

        // Wide-stencil cross terms, diagonal picked by the sign of a_ij.
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) {
                const double aij = a[static_cast<std::size_t>(i * n + j)];
                if (aij == 0.0) continue;
                const double w = std::fabs(aij) / (2.0 * grid.spacing(i) * grid.spacing(j));
                const int sj = aij > 0.0 ? 1 : -1;
                off.assign(static_cast<std::size_t>(n), 0);
                off[static_cast<std::size_t>(i)] = 1;
                off[static_cast<std::size_t>(j)] = sj;
                add(off, w);
                off[static_cast<std::size_t>(i)] = -1;
                off[static_cast<std::size_t>(j)] = -sj;
                add(off, w);
            }
        }

        DiscreteGenerator::Row& row = gen.rows()[node];
        double sum = 0.0;
        for (const auto& [idx, w] : weights) {
            if (idx == node) continue; // reflected leg folded onto the centre: zero coupling
            row.neighbors.push_back({idx, w});
            sum += w;
        }
        // Row sum zero: constants are annihilated exactly.
        row.diag = -sum;
    }

    return gen;
}

} // namespace iqvi
