#pragma once

#include <span>
#include <vector>

#include "iqvi/grid.hpp"
#include "iqvi/problem.hpp"

namespace iqvi {

/// Per-node stencil realizing <b, grad V> + 1/2 tr[sigma sigma^T hess V].
/// Positive-coefficient form: every off-diagonal weight is >= 0 and the
/// diagonal equals minus their sum, so constants are annihilated and the
/// scheme is monotone. Drift uses first-order upwinding, second derivatives
/// central differences, cross derivatives the seven-point wide stencil.
/// Stencil legs leaving the box are reflected back inside (no diffusion
/// through the wall).
class DiscreteGenerator {
public:
    struct Entry {
        std::size_t index;
        double weight;
    };
    struct Row {
        double diag = 0.0;
        std::vector<Entry> neighbors;
    };

    explicit DiscreteGenerator(std::size_t node_count) : rows_(node_count) {}

    /// out = L v (dense over nodes).
    void apply(std::span<const double> v, std::span<double> out) const;
    double apply_at(std::size_t node, std::span<const double> v) const;

    const Row& row(std::size_t node) const { return rows_[node]; }
    std::size_t size() const { return rows_.size(); }
    /// Largest row sum of off-diagonal weights; the explicit-step CFL scale.
    double max_offdiag_sum() const;

    std::vector<Row>& rows() { return rows_; }

private:
    std::vector<Row> rows_;
};

/// Builds the stencil for time t. Throws SolverError when cross-derivative
/// terms are too large for a positive-coefficient discretization (the error
/// names the offending axis and suggests refinement).
DiscreteGenerator build_generator(const ProblemSpec& spec, const GridSpec& grid, double t);

} // namespace iqvi
