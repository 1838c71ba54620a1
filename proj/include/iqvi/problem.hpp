#pragma once

#include <span>
#include <string>
#include <vector>

#include "iqvi/expr.hpp"

namespace iqvi {

/// Full impulse-control problem data: dynamics dX = b dt + sigma dW plus
/// impulse shifts from the finite action set U, running reward f, terminal
/// reward g and intervention cost c with floor k > 0.
struct ProblemSpec {
    int dim = 0;       // state dimension n
    int noise_dim = 0; // Brownian dimension d
    double horizon = 0.0;

    std::vector<Expr> drift;     // n entries, over (t, x)
    std::vector<Expr> diffusion; // n*d entries, row-major, over (t, x)
    Expr running_reward;         // f(t, x)
    Expr terminal_reward;        // g(x)
    Expr cost;                   // c(t, x, xi)

    std::vector<std::vector<double>> impulses; // U, each of size dim
    double cost_floor = 0.0;                   // k

    const Expr& sigma(int i, int j) const { return diffusion[static_cast<std::size_t>(i * noise_dim + j)]; }

    double f_at(double t, std::span<const double> x) const;
    double g_at(std::span<const double> x) const;
    double cost_at(double t, std::span<const double> x, int impulse_index) const;
    void drift_at(double t, std::span<const double> x, std::span<double> out) const;
    /// Writes the n x n matrix a = sigma sigma^T (row-major).
    void diffusion_matrix_at(double t, std::span<const double> x, std::span<double> out) const;

    /// Componentwise max |xi_i| over U; the trust-region shrink radius.
    std::vector<double> impulse_radius() const;
};

/// Parses the flat key/value problem-config document. Keys: dim, horizon,
/// drift.i, sigma.i.j, running_reward, terminal_reward, cost, impulse.m
/// (comma-separated vector), cost_floor. Unknown keys are an error; '#'
/// starts a comment. Throws ConfigError / ParseError.
ProblemSpec parse_problem(const std::string& text);

/// Loads and parses a problem config file. Throws IoError / ConfigError.
ProblemSpec load_problem(const std::string& path);

std::string read_file(const std::string& path);

} // namespace iqvi
