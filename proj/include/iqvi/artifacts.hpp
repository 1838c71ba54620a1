#pragma once

#include <map>
#include <string>
#include <vector>

#include "iqvi/montecarlo.hpp"
#include "iqvi/policy.hpp"
#include "iqvi/solver.hpp"

namespace iqvi {

/// Key/value run manifest. Values are written with full precision; the
/// created_utc entry is the only timestamp and is excluded from hashing.
struct Manifest {
    std::map<std::string, std::string> entries;

    void set(const std::string& key, const std::string& value) { entries[key] = value; }
    void set_double(const std::string& key, double v);
    void set_int(const std::string& key, long v);

    const std::string& get(const std::string& key) const; // throws IoError when absent
    double get_double(const std::string& key) const;
    long get_int(const std::string& key) const;
    bool has(const std::string& key) const { return entries.count(key) > 0; }

    std::vector<double> get_vector(const std::string& key) const;
    std::vector<int> get_int_vector(const std::string& key) const;
};

void write_manifest(const std::string& path, const Manifest& manifest);
Manifest read_manifest(const std::string& path);

/// Deterministic fingerprint of a run: problem file bytes plus the canonical
/// parameter serialization (no timestamps, no thread counts).
std::string run_hash(const std::string& problem_text, const std::string& param_blob);

/// Value CSV: "# run <hash>" comment, then header t,x0..,value; rows are
/// time-major, nodes in lexicographic order, %.17g throughout.
void write_value_csv(const std::string& path, const SolveResult& result, const ProblemSpec& spec,
                     const GridSpec& grid, const std::string& hash);
std::vector<ValueField> read_value_csv(const std::string& path, const ProblemSpec& spec,
                                       const GridSpec& grid, std::string* hash_out = nullptr);

/// Policy CSV: t,x0..,action,impulse_index,xi0.. with the contact tolerance
/// recorded in a comment line.
void write_policy_csv(const std::string& path, const Policy& policy, const ProblemSpec& spec,
                      const GridSpec& grid, const std::string& hash);
Policy read_policy_csv(const std::string& path, const ProblemSpec& spec, const GridSpec& grid,
                       std::string* hash_out = nullptr);

/// Complementarity residual CSV per interior time level.
void write_residual_csv(const std::string& path, const ResidualReport& report,
                        const ProblemSpec& spec, const GridSpec& grid, const std::string& hash);

/// Per-path CSV (path,J,impulses,total_cost) and the plain-text summary.
void write_sim_csv(const std::string& path, const SimReport& report, const std::string& hash);
void write_sim_summary(const std::string& path, const SimReport& report, const SimConfig& cfg,
                       const std::string& hash);

} // namespace iqvi
