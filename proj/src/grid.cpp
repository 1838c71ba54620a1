#include "iqvi/grid.hpp"

#include <cmath>

#include "iqvi/errors.hpp"

namespace iqvi {

void GridSpec::validate(int dim) const {
    if (static_cast<int>(lower.size()) != dim || static_cast<int>(upper.size()) != dim ||
        static_cast<int>(nodes.size()) != dim)
        throw ConfigError("grid dimension mismatch: expected " + std::to_string(dim) + " axes");
    for (int i = 0; i < dim; ++i) {
        if (!(lower[static_cast<std::size_t>(i)] < upper[static_cast<std::size_t>(i)]))
            throw ConfigError("grid axis " + std::to_string(i) + ": lower must be < upper");
        if (nodes[static_cast<std::size_t>(i)] < 3)
            throw ConfigError("grid axis " + std::to_string(i) + ": need at least 3 nodes");
    }
    if (time_steps < 1) throw ConfigError("time_steps must be >= 1");
}

std::size_t GridSpec::node_count() const {
    std::size_t n = 1;
    for (int k : nodes) n *= static_cast<std::size_t>(k);
    return n;
}

std::size_t GridSpec::flatten(std::span<const int> multi) const {
    std::size_t flat = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i)
        flat = flat * static_cast<std::size_t>(nodes[i]) + static_cast<std::size_t>(multi[i]);
    return flat;
}

void GridSpec::unflatten(std::size_t flat, std::span<int> multi) const {
    for (std::size_t i = nodes.size(); i-- > 0;) {
        multi[i] = static_cast<int>(flat % static_cast<std::size_t>(nodes[i]));
        flat /= static_cast<std::size_t>(nodes[i]);
    }
}

void GridSpec::coords(std::size_t flat, std::span<double> x) const {
    for (std::size_t i = nodes.size(); i-- > 0;) {
        int idx = static_cast<int>(flat % static_cast<std::size_t>(nodes[i]));
        flat /= static_cast<std::size_t>(nodes[i]);
        x[i] = coord(static_cast<int>(i), idx);
    }
}

bool GridSpec::is_wall(std::size_t flat) const {
    for (std::size_t i = nodes.size(); i-- > 0;) {
        int idx = static_cast<int>(flat % static_cast<std::size_t>(nodes[i]));
        flat /= static_cast<std::size_t>(nodes[i]);
        if (idx == 0 || idx == nodes[i] - 1) return true;
    }
    return false;
}

void GridSpec::clamp(std::span<double> x) const {
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (x[i] < lower[i]) x[i] = lower[i];
        if (x[i] > upper[i]) x[i] = upper[i];
    }
}

bool GridSpec::inside(std::span<const double> x, double slack) const {
    for (std::size_t i = 0; i < nodes.size(); ++i)
        if (x[i] < lower[i] - slack || x[i] > upper[i] + slack) return false;
    return true;
}

bool ValueField::all_finite() const {
    for (double v : values)
        if (!std::isfinite(v)) return false;
    return true;
}

double interpolate(const ValueField& field, std::span<const double> x, const GridSpec& grid) {
    const int n = grid.dim();
    // Relative slack absorbs clamp-then-interpolate rounding only.
    for (int i = 0; i < n; ++i) {
        double span = grid.upper[static_cast<std::size_t>(i)] - grid.lower[static_cast<std::size_t>(i)];
        if (x[static_cast<std::size_t>(i)] < grid.lower[static_cast<std::size_t>(i)] - 1e-12 * span ||
            x[static_cast<std::size_t>(i)] > grid.upper[static_cast<std::size_t>(i)] + 1e-12 * span)
            throw ConfigError("interpolation point outside the grid box (axis " +
                              std::to_string(i) + ")");
    }

    std::vector<int> base(static_cast<std::size_t>(n));
    std::vector<double> frac(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        double h = grid.spacing(i);
        double u = (x[static_cast<std::size_t>(i)] - grid.lower[static_cast<std::size_t>(i)]) / h;
        int cell = static_cast<int>(std::floor(u));
        int last_cell = grid.nodes[static_cast<std::size_t>(i)] - 2;
        if (cell < 0) cell = 0;
        if (cell > last_cell) cell = last_cell;
        base[static_cast<std::size_t>(i)] = cell;
        double f = u - cell;
        frac[static_cast<std::size_t>(i)] = f < 0.0 ? 0.0 : (f > 1.0 ? 1.0 : f);
    }

    double acc = 0.0;
    std::vector<int> corner(static_cast<std::size_t>(n));
    const unsigned corners = 1u << n;
    for (unsigned mask = 0; mask < corners; ++mask) {
        double w = 1.0;
        for (int i = 0; i < n; ++i) {
            bool hi = (mask >> i) & 1u;
            w *= hi ? frac[static_cast<std::size_t>(i)] : 1.0 - frac[static_cast<std::size_t>(i)];
            corner[static_cast<std::size_t>(i)] = base[static_cast<std::size_t>(i)] + (hi ? 1 : 0);
        }
        if (w != 0.0) acc += w * field.values[grid.flatten(corner)];
    }
    return acc;
}

TrustRegion TrustRegion::from(const ProblemSpec& spec, const GridSpec& grid) {
    TrustRegion tr;
    std::vector<double> r = spec.impulse_radius();
    tr.lower.resize(static_cast<std::size_t>(grid.dim()));
    tr.upper.resize(static_cast<std::size_t>(grid.dim()));
    for (int i = 0; i < grid.dim(); ++i) {
        tr.lower[static_cast<std::size_t>(i)] =
            grid.lower[static_cast<std::size_t>(i)] + r[static_cast<std::size_t>(i)];
        tr.upper[static_cast<std::size_t>(i)] =
            grid.upper[static_cast<std::size_t>(i)] - r[static_cast<std::size_t>(i)];
    }
    return tr;
}

bool TrustRegion::contains(std::span<const double> x) const {
    for (std::size_t i = 0; i < lower.size(); ++i)
        if (x[i] < lower[i] || x[i] > upper[i]) return false;
    return true;
}

bool TrustRegion::contains_node(const GridSpec& grid, std::size_t flat) const {
    if (grid.is_wall(flat)) return false;
    std::vector<double> x(static_cast<std::size_t>(grid.dim()));
    grid.coords(flat, x);
    return contains(x);
}

double sampled_sup_f(const ProblemSpec& spec, const GridSpec& grid) {
    double sup = 0.0;
    std::vector<double> x(static_cast<std::size_t>(grid.dim()));
    const double dt = grid.time_step(spec.horizon);
    for (int m = 0; m <= grid.time_steps; ++m) {
        double t = dt * m;
        for (std::size_t i = 0; i < grid.node_count(); ++i) {
            grid.coords(i, x);
            sup = std::max(sup, std::fabs(spec.f_at(t, x)));
        }
    }
    return sup;
}

double sampled_sup_g(const ProblemSpec& spec, const GridSpec& grid) {
    double sup = 0.0;
    std::vector<double> x(static_cast<std::size_t>(grid.dim()));
    for (std::size_t i = 0; i < grid.node_count(); ++i) {
        grid.coords(i, x);
        sup = std::max(sup, std::fabs(spec.g_at(x)));
    }
    return sup;
}

double value_bound(const ProblemSpec& spec, const GridSpec& grid) {
    return spec.horizon * sampled_sup_f(spec, grid) + sampled_sup_g(spec, grid);
}

} // namespace iqvi
