#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "iqvi/policy.hpp"

namespace iqvi {

/// Monte Carlo run parameters. `impulse_cap` bounds interventions per path
/// (the expected-cost bound divided by the cost floor makes more impulses
/// worthless); 0 means "use the default cap for the problem".
struct SimConfig {
    double t0 = 0.0;
    std::vector<double> x0;
    long paths = 10000;
    double dt = 0.01;
    std::uint64_t seed = 1;
    int impulse_cap = 0;
    bool antithetic = false;
    int threads = 1;
};

/// Default cap: ceil(10 * (T*||f|| + ||g||) / k) with sampled sup-norms.
int default_impulse_cap(const ProblemSpec& spec, const GridSpec& grid);

struct ImpulseEvent {
    double time = 0.0;
    int impulse = -1;
    double cost = 0.0;
};

/// Per-path outcome. Event times are strictly increasing (one impulse per
/// step); the full state trajectory is consumed during simulation and not
/// retained.
struct PathStat {
    double gain = 0.0; // realized J on this path
    double running_reward = 0.0;
    double terminal_reward = 0.0;
    double total_cost = 0.0;
    int impulses = 0;
    bool left_trust_region = false;
    std::vector<ImpulseEvent> events;
};

/// Estimate of the gain functional under a fixed feedback policy.
struct SimReport {
    double mean = 0.0;
    double std_error = 0.0;
    double mean_cost = 0.0;
    long paths = 0;
    long flagged = 0; // paths that left the trust region at least once
    std::vector<long> impulse_histogram;
    std::vector<PathStat> per_path;
    std::uint64_t seed = 0;
    std::string rng = "";
};

/// Simulates the controlled diffusion under `policy` (nearest time level,
/// nearest node lookup; at most one impulse per step, capped) and estimates
/// J = E[ int f dt - sum costs + g(X_T) ].
SimReport simulate_paths(const ProblemSpec& spec, const Policy& policy, const GridSpec& grid,
                         const SimConfig& cfg);

/// No-impulse Feynman-Kac estimate of V^0(t0, x0). The grid is only used
/// for trust-region flagging when supplied.
SimReport feynman_kac_v0(const ProblemSpec& spec, const SimConfig& cfg,
                         const GridSpec* grid = nullptr);

} // namespace iqvi
