#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "iqvi/errors.hpp"

namespace iqvi {

/// Variables available at an evaluation point. `xi` is only supplied when
/// evaluating impulse cost expressions.
struct EvalPoint {
    double t = 0.0;
    std::span<const double> x;
    std::span<const double> xi; // empty when no impulse argument applies
};

/// Immutable arithmetic expression over t, x0..x{n-1}, xi0..xi{n-1}.
///
/// Grammar (precedence low to high): `+ -`, `* /`, unary `-`, `^`
/// (right-associative), then atoms: numbers, variables, parenthesised
/// expressions and function calls. Unary functions: abs, exp, sqrt, sin,
/// cos, max0; binary: min, max, pow.
class Expr {
public:
    Expr() = default;

    /// Throws ParseError with the byte offset of the offending token.
    static Expr parse(std::string_view source);

    /// Throws EvalError on domain failures (division by zero, sqrt of a
    /// negative, non-finite intermediate, variable not supplied).
    double eval(const EvalPoint& p) const;

    /// Canonical printing; parse(str()) reproduces the identical tree.
    std::string str() const;

    bool operator==(const Expr& other) const;

    bool empty() const { return root_ == nullptr; }
    bool uses_t() const;
    bool uses_xi() const;
    /// Largest state index referenced, -1 if none.
    int max_x_index() const;
    int max_xi_index() const;

    struct Node;

private:
    explicit Expr(std::shared_ptr<const Node> root) : root_(std::move(root)) {}
    std::shared_ptr<const Node> root_;
};

} // namespace iqvi
