#include "iqvi/validate.hpp"

#include <cmath>
#include <sstream>

#include "iqvi/errors.hpp"
#include "iqvi/util.hpp"

namespace iqvi {

std::string CheckResult::describe() const {
    std::ostringstream out;
    out << name << ": " << (pass ? "pass" : "FAIL");
    if (!pass) {
        out << " (violation " << format_double(worst) << " at t=" << format_double(where_t)
            << " x=(" << join_doubles(where_x) << ")";
        if (where_xi >= 0) out << " xi_index=" << where_xi;
        out << ")";
    }
    if (!note.empty()) out << " [" << note << "]";
    return out.str();
}

bool ValidationReport::all_pass() const {
    return h1_coefficients.pass && h2_rewards.pass && h3_cost_floor.pass &&
           h3_subadditive.pass && h4_terminal.pass;
}

std::string ValidationReport::summary() const {
    std::ostringstream out;
    out << h1_coefficients.describe() << "\n"
        << h2_rewards.describe() << "\n"
        << h3_cost_floor.describe() << "\n"
        << h3_subadditive.describe() << "\n"
        << h4_terminal.describe() << "\n"
        << "lipschitz_estimate = " << format_double(lipschitz_estimate) << "\n"
        << "sup_drift = " << format_double(sup_drift)
        << ", sup_diffusion = " << format_double(sup_diffusion)
        << ", sup_running = " << format_double(sup_running)
        << ", sup_terminal = " << format_double(sup_terminal) << "\n"
        << "overall: " << (all_pass() ? "pass" : "FAIL") << "\n";
    return out.str();
}

namespace {

struct Witness {
    double t;
    const std::vector<double>& x;
    int xi;
};

// Tracks the worst violation with its witness; > tol flips the check to fail.
void record(CheckResult& check, double violation, double tol, const Witness& w) {
    if (violation > check.worst) {
        check.worst = violation;
        check.where_t = w.t;
        check.where_x = w.x;
        check.where_xi = w.xi;
    }
    if (violation > tol) check.pass = false;
}

void record_error(CheckResult& check, const EvalError& e, const Witness& w) {
    check.pass = false;
    check.where_t = w.t;
    check.where_x = w.x;
    check.where_xi = w.xi;
    if (check.note.empty())
        check.note = std::string("evaluation error: ") + e.what() + " at expression offset " +
                     std::to_string(e.offset());
}

} // namespace

ValidationReport validate_problem(const ProblemSpec& spec, const GridSpec& grid, double tol) {
    ValidationReport rep;
    rep.h1_coefficients.name = "H1 drift/diffusion regularity";
    rep.h2_rewards.name = "H2 reward boundedness";
    rep.h3_cost_floor.name = "H3 cost floor (inf c >= k)";
    rep.h3_subadditive.name = "H3 cost subadditivity";
    rep.h4_terminal.name = "H4 terminal no-impulse inequality";

    const int n = grid.dim();
    const double T = spec.horizon;
    const double dt = grid.time_step(T);
    const std::size_t count = grid.node_count();
    std::vector<double> x(static_cast<std::size_t>(n));
    std::vector<double> xn(static_cast<std::size_t>(n));
    std::vector<double> b0(static_cast<std::size_t>(n)), b1(static_cast<std::size_t>(n));
    std::vector<double> multi_buf(static_cast<std::size_t>(n));
    std::vector<int> multi(static_cast<std::size_t>(n));

    const int nxi = static_cast<int>(spec.impulses.size());

    // H1: finiteness + sampled Lipschitz constant over axis-neighbour pairs.
    for (int m = 0; m <= grid.time_steps; ++m) {
        double t = dt * m;
        for (std::size_t i = 0; i < count; ++i) {
            grid.coords(i, x);
            Witness w{t, x, -1};
            try {
                spec.drift_at(t, x, b0);
                for (double v : b0) rep.sup_drift = std::max(rep.sup_drift, std::fabs(v));
                double snorm = 0.0;
                for (int r = 0; r < spec.dim; ++r)
                    for (int c = 0; c < spec.noise_dim; ++c) {
                        double s = spec.sigma(r, c).eval({t, x, {}});
                        snorm += s * s;
                    }
                rep.sup_diffusion = std::max(rep.sup_diffusion, std::sqrt(snorm));
                if (!std::isfinite(snorm)) record(rep.h1_coefficients, 1.0, tol, w);

                // divided differences against the +h neighbour on each axis
                grid.unflatten(i, multi);
                for (int axis = 0; axis < n; ++axis) {
                    if (multi[static_cast<std::size_t>(axis)] + 1 >=
                        grid.nodes[static_cast<std::size_t>(axis)])
                        continue;
                    xn = x;
                    xn[static_cast<std::size_t>(axis)] += grid.spacing(axis);
                    spec.drift_at(t, xn, b1);
                    double db = 0.0;
                    for (int r = 0; r < n; ++r) {
                        double d = b1[static_cast<std::size_t>(r)] - b0[static_cast<std::size_t>(r)];
                        db += d * d;
                    }
                    double ds = 0.0;
                    for (int r = 0; r < spec.dim; ++r)
                        for (int c = 0; c < spec.noise_dim; ++c) {
                            double d = spec.sigma(r, c).eval({t, xn, {}}) -
                                       spec.sigma(r, c).eval({t, x, {}});
                            ds += d * d;
                        }
                    double est = (std::sqrt(db) + std::sqrt(ds)) / grid.spacing(axis);
                    rep.lipschitz_estimate = std::max(rep.lipschitz_estimate, est);
                }
            } catch (const EvalError& e) {
                record_error(rep.h1_coefficients, e, w);
            }

            // H2 on the same sweep.
            try {
                double fv = spec.f_at(t, x);
                rep.sup_running = std::max(rep.sup_running, std::fabs(fv));
                if (m == 0) {
                    double gv = spec.g_at(x);
                    rep.sup_terminal = std::max(rep.sup_terminal, std::fabs(gv));
                }
            } catch (const EvalError& e) {
                record_error(rep.h2_rewards, e, w);
            }
        }
    }
    rep.h1_coefficients.note = rep.h1_coefficients.note.empty()
                                   ? "Lipschitz constant estimated by sampling, not proven"
                                   : rep.h1_coefficients.note;

    // H3 floor: c >= k at every (t_m, node, xi).
    for (int m = 0; m <= grid.time_steps; ++m) {
        double t = dt * m;
        for (std::size_t i = 0; i < count; ++i) {
            grid.coords(i, x);
            for (int j = 0; j < nxi; ++j) {
                Witness w{t, x, j};
                try {
                    double c = spec.cost_at(t, x, j);
                    record(rep.h3_cost_floor, spec.cost_floor - c, tol, w);
                } catch (const EvalError& e) {
                    record_error(rep.h3_cost_floor, e, w);
                }
            }
        }
    }

    // H3 subadditivity, restricted to pairs whose sum is itself in U.
    std::vector<std::pair<int, std::pair<int, int>>> sum_pairs; // (sum index, (j1, j2))
    for (int j1 = 0; j1 < nxi; ++j1) {
        for (int j2 = 0; j2 < nxi; ++j2) {
            std::vector<double> s(static_cast<std::size_t>(n));
            for (int r = 0; r < n; ++r)
                s[static_cast<std::size_t>(r)] =
                    spec.impulses[static_cast<std::size_t>(j1)][static_cast<std::size_t>(r)] +
                    spec.impulses[static_cast<std::size_t>(j2)][static_cast<std::size_t>(r)];
            for (int js = 0; js < nxi; ++js) {
                bool match = true;
                for (int r = 0; r < n; ++r) {
                    double u = spec.impulses[static_cast<std::size_t>(js)][static_cast<std::size_t>(r)];
                    if (std::fabs(u - s[static_cast<std::size_t>(r)]) >
                        1e-9 * (1.0 + std::fabs(u))) {
                        match = false;
                        break;
                    }
                }
                if (match) {
                    sum_pairs.push_back({js, {j1, j2}});
                    break;
                }
            }
        }
    }
    for (int m = 0; m <= grid.time_steps; ++m) {
        double t = dt * m;
        for (std::size_t i = 0; i < count; ++i) {
            grid.coords(i, x);
            for (const auto& [js, pair] : sum_pairs) {
                Witness w{t, x, js};
                try {
                    double lhs = spec.cost_at(t, x, js);
                    double rhs = spec.cost_at(t, x, pair.first) + spec.cost_at(t, x, pair.second);
                    record(rep.h3_subadditive, lhs - rhs, tol, w);
                } catch (const EvalError& e) {
                    record_error(rep.h3_subadditive, e, w);
                }
            }
        }
    }
    if (sum_pairs.empty())
        rep.h3_subadditive.note = "no impulse pair sums to an element of U; vacuously true";

    // H4: sup_xi [g(x+xi) - c(T,x,xi)] <= g(x) on the lattice.
    for (std::size_t i = 0; i < count; ++i) {
        grid.coords(i, x);
        try {
            double gx = spec.g_at(x);
            for (int j = 0; j < nxi; ++j) {
                Witness w{T, x, j};
                try {
                    xn = x;
                    for (int r = 0; r < n; ++r)
                        xn[static_cast<std::size_t>(r)] +=
                            spec.impulses[static_cast<std::size_t>(j)][static_cast<std::size_t>(r)];
                    double gain = spec.g_at(xn) - spec.cost_at(T, x, j);
                    record(rep.h4_terminal, gain - gx, tol, w);
                } catch (const EvalError& e) {
                    record_error(rep.h4_terminal, e, w);
                }
            }
        } catch (const EvalError& e) {
            record_error(rep.h4_terminal, e, Witness{T, x, -1});
        }
    }

    return rep;
}

} // namespace iqvi
