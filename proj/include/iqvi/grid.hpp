#pragma once

#include <span>
#include <vector>

#include "iqvi/problem.hpp"

namespace iqvi {

/// Truncated space-time lattice. Space: the closed box [lower, upper] with
/// `nodes[i]` points per axis (uniform spacing). Time: levels 0..time_steps
/// with dt = horizon / time_steps.
struct GridSpec {
    std::vector<double> lower, upper;
    std::vector<int> nodes;
    int time_steps = 0;

    /// Throws ConfigError if corners are not ordered, an axis has fewer than
    /// 3 nodes, or time_steps < 1.
    void validate(int dim) const;

    int dim() const { return static_cast<int>(nodes.size()); }
    double spacing(int axis) const {
        return (upper[static_cast<std::size_t>(axis)] - lower[static_cast<std::size_t>(axis)]) /
               (nodes[static_cast<std::size_t>(axis)] - 1);
    }
    double time_step(double horizon) const { return horizon / time_steps; }

    std::size_t node_count() const;
    /// Flat index of a multi-index (axis 0 slowest: lexicographic order).
    std::size_t flatten(std::span<const int> multi) const;
    void unflatten(std::size_t flat, std::span<int> multi) const;
    void coords(std::size_t flat, std::span<double> x) const;
    double coord(int axis, int node_index) const {
        return lower[static_cast<std::size_t>(axis)] + spacing(axis) * node_index;
    }
    bool is_wall(std::size_t flat) const;

    /// Clamps x into the closed box, in place.
    void clamp(std::span<double> x) const;
    bool inside(std::span<const double> x, double slack = 0.0) const;
};

/// One value per spatial node at a fixed time level.
struct ValueField {
    int time_index = 0;
    std::vector<double> values;

    bool all_finite() const;
};

/// Multilinear interpolation of a node field at x. The caller must supply x
/// inside the closed box (clamp first); outside points throw ConfigError.
/// Exact at nodes and on affine data.
double interpolate(const ValueField& field, std::span<const double> x, const GridSpec& grid);

/// Sub-box whose values are deemed unaffected by boundary truncation:
/// the grid box shrunk by the componentwise impulse radius. Wall nodes are
/// excluded even when the radius is zero.
struct TrustRegion {
    std::vector<double> lower, upper;

    static TrustRegion from(const ProblemSpec& spec, const GridSpec& grid);
    bool contains(std::span<const double> x) const;
    bool contains_node(const GridSpec& grid, std::size_t flat) const;
};

/// Largest |f| over all lattice nodes and time levels.
double sampled_sup_f(const ProblemSpec& spec, const GridSpec& grid);
/// Largest |g| over all lattice nodes.
double sampled_sup_g(const ProblemSpec& spec, const GridSpec& grid);

/// Discrete analogue of the value-function bound: T*||f||_inf + ||g||_inf
/// with sampled sup-norms.
double value_bound(const ProblemSpec& spec, const GridSpec& grid);

} // namespace iqvi
