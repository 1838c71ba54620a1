#include "iqvi/solver.hpp"

#include <cmath>

#include "iqvi/errors.hpp"
#include "iqvi/util.hpp"

namespace iqvi {

double SolveResult::sup_norm() const {
    double sup = 0.0;
    for (const ValueField& level : levels)
        for (double v : level.values) sup = std::max(sup, std::fabs(v));
    return sup;
}

namespace {

// rhs of the theta-step linear system (I - theta dt L_t) V = rhs:
// rhs = (I + (1-theta) dt L_{t+dt}) V_next + dt f_blend.
std::vector<double> step_rhs(const ValueField& v_next, double t, double dt,
                             const ProblemSpec& spec, const GridSpec& grid,
                             const SolveConfig& cfg, const DiscreteGenerator* gen_next) {
    const std::size_t count = grid.node_count();
    std::vector<double> rhs(count);
    std::vector<double> x(static_cast<std::size_t>(grid.dim()));

    if (cfg.theta < 1.0) {
        // CFL guard: the explicit part must keep a nonnegative coefficient
        // on the departing value.
        double cfl = (1.0 - cfg.theta) * dt * gen_next->max_offdiag_sum();
        if (cfl > 1.0 + 1e-12)
            throw SolverError("explicit step unstable (CFL " + format_double(cfl) +
                              " > 1); increase theta or time steps");
        gen_next->apply(v_next.values, rhs);
        for (std::size_t i = 0; i < count; ++i)
            rhs[i] = v_next.values[i] + (1.0 - cfg.theta) * dt * rhs[i];
    } else {
        for (std::size_t i = 0; i < count; ++i) rhs[i] = v_next.values[i];
    }

    for (std::size_t i = 0; i < count; ++i) {
        grid.coords(i, x);
        double f_blend = cfg.theta * spec.f_at(t, x) +
                         (1.0 - cfg.theta) * spec.f_at(t + dt, x);
        rhs[i] += dt * f_blend;
    }
    return rhs;
}

// Damped Gauss-Seidel on (I - theta dt L) v = rhs, optionally projected onto
// {v >= obstacle} after each nodewise update. Stops on the sup-norm of the
// appropriate residual (linear residual, or min(residual, v - obstacle)).
void relax_solve(std::vector<double>& v, const std::vector<double>& rhs,
                 const DiscreteGenerator& gen, double theta_dt, const SolveConfig& cfg,
                 const std::vector<double>* obstacle) {
    const std::size_t count = v.size();
    const double tol = obstacle ? cfg.inner_tol : cfg.lin_tol;

    if (obstacle)
        for (std::size_t i = 0; i < count; ++i) v[i] = std::max(v[i], (*obstacle)[i]);

    for (int sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
        for (std::size_t i = 0; i < count; ++i) {
            const DiscreteGenerator::Row& row = gen.row(i);
            double off = 0.0;
            for (const auto& e : row.neighbors) off += e.weight * v[e.index];
            const double diag = 1.0 - theta_dt * row.diag; // >= 1
            double candidate = (rhs[i] + theta_dt * off) / diag;
            double updated = v[i] + cfg.relax * (candidate - v[i]);
            if (obstacle && updated < (*obstacle)[i]) updated = (*obstacle)[i];
            v[i] = updated;
        }

        double res = 0.0;
        for (std::size_t i = 0; i < count; ++i) {
            const DiscreteGenerator::Row& row = gen.row(i);
            double off = 0.0;
            for (const auto& e : row.neighbors) off += e.weight * v[e.index];
            double lin = (1.0 - theta_dt * row.diag) * v[i] - theta_dt * off - rhs[i];
            double r = obstacle ? std::min(lin, v[i] - (*obstacle)[i]) : lin;
            res = std::max(res, std::fabs(r));
        }
        if (res <= tol) return;
    }

    // Re-derive the final residual for the message.
    double res = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        const DiscreteGenerator::Row& row = gen.row(i);
        double off = 0.0;
        for (const auto& e : row.neighbors) off += e.weight * v[e.index];
        double lin = (1.0 - theta_dt * row.diag) * v[i] - theta_dt * off - rhs[i];
        double r = obstacle ? std::min(lin, v[i] - (*obstacle)[i]) : lin;
        res = std::max(res, std::fabs(r));
    }
    throw SolverError("relaxation failed to reach " + format_double(tol) + " within " +
                      std::to_string(cfg.max_sweeps) + " sweeps (residual " +
                      format_double(res) + ")");
}

ValueField do_step(const ValueField& v_next, const ValueField* obstacle, double t,
                   const ProblemSpec& spec, const GridSpec& grid, const SolveConfig& cfg) {
    const double dt = grid.time_step(spec.horizon);
    DiscreteGenerator gen_t = build_generator(spec, grid, t);
    std::optional<DiscreteGenerator> gen_next;
    if (cfg.theta < 1.0) gen_next.emplace(build_generator(spec, grid, t + dt));

    std::vector<double> rhs =
        step_rhs(v_next, t, dt, spec, grid, cfg, gen_next ? &*gen_next : nullptr);

    ValueField out;
    out.time_index = v_next.time_index - 1;
    out.values = v_next.values; // warm start
    relax_solve(out.values, rhs, gen_t, cfg.theta * dt, cfg,
                obstacle ? &obstacle->values : nullptr);
    if (!out.all_finite()) throw SolverError("non-finite value after time step");
    return out;
}

ValueField terminal_field(const ProblemSpec& spec, const GridSpec& grid) {
    ValueField g;
    g.time_index = grid.time_steps;
    g.values.resize(grid.node_count());
    std::vector<double> x(static_cast<std::size_t>(grid.dim()));
    for (std::size_t i = 0; i < grid.node_count(); ++i) {
        grid.coords(i, x);
        g.values[i] = spec.g_at(x);
    }
    return g;
}

// Backward sweep over levels m_end-1 .. 0 with terminal data at m_end.
// `previous` supplies the obstacle source M previous[m]; null = no obstacle.
std::vector<ValueField> backward_sweep(const ValueField& terminal, int m_end,
                                       const std::vector<ValueField>* previous,
                                       const ProblemSpec& spec, const GridSpec& grid,
                                       const SolveConfig& cfg) {
    const double dt = grid.time_step(spec.horizon);
    std::vector<ValueField> levels(static_cast<std::size_t>(m_end) + 1);
    levels[static_cast<std::size_t>(m_end)] = terminal;
    levels[static_cast<std::size_t>(m_end)].time_index = m_end;

    for (int m = m_end - 1; m >= 0; --m) {
        const double t = dt * m;
        const ValueField& next = levels[static_cast<std::size_t>(m + 1)];
        if (previous) {
            ValueField obstacle = intervention_operator((*previous)[static_cast<std::size_t>(m)],
                                                        t, spec, grid, cfg.threads);
            levels[static_cast<std::size_t>(m)] = do_step(next, &obstacle, t, spec, grid, cfg);
        } else {
            levels[static_cast<std::size_t>(m)] = do_step(next, nullptr, t, spec, grid, cfg);
        }
    }
    return levels;
}

// Sup-norm and most-negative nodewise difference between two cascades.
std::pair<double, double> field_diff(const std::vector<ValueField>& a,
                                     const std::vector<ValueField>& b) {
    double sup = 0.0;
    double most_negative = 0.0;
    for (std::size_t m = 0; m < a.size(); ++m)
        for (std::size_t i = 0; i < a[m].values.size(); ++i) {
            double d = a[m].values[i] - b[m].values[i];
            sup = std::max(sup, std::fabs(d));
            most_negative = std::min(most_negative, d);
        }
    return {sup, most_negative};
}

SolveResult run_cascade(const ValueField& terminal, int m_end, const ProblemSpec& spec,
                        const GridSpec& grid, const SolveConfig& cfg, CascadeStart start) {
    SolveResult result;

    if (start == CascadeStart::FromV0) {
        result.levels = backward_sweep(terminal, m_end, nullptr, spec, grid, cfg);
    } else {
        const double bound = value_bound(spec, grid);
        result.levels.assign(static_cast<std::size_t>(m_end) + 1, ValueField{});
        for (int m = 0; m <= m_end; ++m) {
            result.levels[static_cast<std::size_t>(m)].time_index = m;
            result.levels[static_cast<std::size_t>(m)].values.assign(grid.node_count(), bound);
        }
        result.levels[static_cast<std::size_t>(m_end)] = terminal;
        result.levels[static_cast<std::size_t>(m_end)].time_index = m_end;
    }

    result.converged = false;
    for (int n = 1; n <= cfg.max_cascade; ++n) {
        std::vector<ValueField> next = backward_sweep(terminal, m_end, &result.levels, spec, grid, cfg);
        auto [sup, most_negative] = field_diff(next, result.levels);
        result.levels = std::move(next);
        result.increments.push_back(sup);
        result.min_increments.push_back(most_negative);
        result.n_used = n;
        if (sup < cfg.cascade_tol) {
            result.converged = true;
            break;
        }
    }
    return result;
}

} // namespace

ValueField solve_pde_step(const ValueField& v_next, double t, const ProblemSpec& spec,
                          const GridSpec& grid, const SolveConfig& cfg) {
    return do_step(v_next, nullptr, t, spec, grid, cfg);
}

ValueField solve_obstacle_step(const ValueField& v_next, const ValueField& obstacle, double t,
                               const ProblemSpec& spec, const GridSpec& grid,
                               const SolveConfig& cfg) {
    return do_step(v_next, &obstacle, t, spec, grid, cfg);
}

SolveResult solve_v0(const ProblemSpec& spec, const GridSpec& grid, const SolveConfig& cfg) {
    grid.validate(spec.dim);
    SolveResult result;
    result.levels = backward_sweep(terminal_field(spec, grid), grid.time_steps, nullptr, spec,
                                   grid, cfg);
    result.n_used = 0;
    result.converged = true;
    return result;
}

SolveResult iterated_optimal_stopping(const ProblemSpec& spec, const GridSpec& grid,
                                      const SolveConfig& cfg, CascadeStart start) {
    grid.validate(spec.dim);
    return run_cascade(terminal_field(spec, grid), grid.time_steps, spec, grid, cfg, start);
}

ResidualReport qvi_residuals(const SolveResult& result, const ProblemSpec& spec,
                             const GridSpec& grid, const SolveConfig& cfg) {
    const double dt = grid.time_step(spec.horizon);
    const std::size_t count = grid.node_count();
    const int m_end = static_cast<int>(result.levels.size()) - 1;
    const TrustRegion trust = TrustRegion::from(spec, grid);

    ResidualReport rep;
    rep.pde.reserve(static_cast<std::size_t>(m_end));
    std::vector<double> x(static_cast<std::size_t>(grid.dim()));

    for (int m = 0; m < m_end; ++m) {
        const double t = dt * m;
        const ValueField& vm = result.levels[static_cast<std::size_t>(m)];
        const ValueField& vnext = result.levels[static_cast<std::size_t>(m + 1)];

        DiscreteGenerator gen_t = build_generator(spec, grid, t);
        std::optional<DiscreteGenerator> gen_next;
        if (cfg.theta < 1.0) gen_next.emplace(build_generator(spec, grid, t + dt));

        ValueField pde{m, std::vector<double>(count)};
        ValueField obs{m, std::vector<double>(count)};
        ValueField comp{m, std::vector<double>(count)};

        ValueField mv = intervention_operator(vm, t, spec, grid);

        for (std::size_t i = 0; i < count; ++i) {
            grid.coords(i, x);
            double lv = cfg.theta * gen_t.apply_at(i, vm.values);
            if (cfg.theta < 1.0) lv += (1.0 - cfg.theta) * gen_next->apply_at(i, vnext.values);
            double f_blend = cfg.theta * spec.f_at(t, x) +
                             (1.0 - cfg.theta) * spec.f_at(t + dt, x);
            pde.values[i] = -(vnext.values[i] - vm.values[i]) / dt - lv - f_blend;
            obs.values[i] = vm.values[i] - mv.values[i];
            comp.values[i] = std::min(pde.values[i], obs.values[i]);

            double mag = std::fabs(comp.values[i]);
            if (!grid.is_wall(i)) rep.sup_interior = std::max(rep.sup_interior, mag);
            if (trust.contains_node(grid, i)) rep.sup_trust = std::max(rep.sup_trust, mag);
        }
        rep.pde.push_back(std::move(pde));
        rep.obstacle.push_back(std::move(obs));
        rep.complementarity.push_back(std::move(comp));
    }
    return rep;
}

double dpp_restart_check(const SolveResult& result, int r_index, const ProblemSpec& spec,
                         const GridSpec& grid, const SolveConfig& cfg) {
    if (r_index < 0 || r_index > grid.time_steps)
        throw ConfigError("restart index out of range");
    if (r_index == 0) return 0.0;

    ValueField terminal = result.levels[static_cast<std::size_t>(r_index)];
    terminal.time_index = r_index;
    SolveResult restarted =
        run_cascade(terminal, r_index, spec, grid, cfg, CascadeStart::FromV0);

    double sup = 0.0;
    const ValueField& a = restarted.levels[0];
    const ValueField& b = result.levels[0];
    for (std::size_t i = 0; i < a.values.size(); ++i)
        sup = std::max(sup, std::fabs(a.values[i] - b.values[i]));
    return sup;
}

namespace {

SolveResult scale_levels(const SolveResult& result, const ProblemSpec& spec,
                         const GridSpec& grid, bool inverse) {
    const double dt = grid.time_step(spec.horizon);
    SolveResult out = result;
    for (ValueField& level : out.levels) {
        const double factor = inverse ? std::exp(-dt * level.time_index)
                                      : std::exp(dt * level.time_index);
        for (double& v : level.values) v *= factor;
    }
    return out;
}

} // namespace

SolveResult exp_transform(const SolveResult& result, const ProblemSpec& spec,
                          const GridSpec& grid) {
    return scale_levels(result, spec, grid, false);
}

SolveResult exp_transform_inverse(const SolveResult& result, const ProblemSpec& spec,
                                  const GridSpec& grid) {
    return scale_levels(result, spec, grid, true);
}

} // namespace iqvi
