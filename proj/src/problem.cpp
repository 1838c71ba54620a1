#include "iqvi/problem.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "iqvi/errors.hpp"

namespace iqvi {

double ProblemSpec::f_at(double t, std::span<const double> x) const {
    return running_reward.eval({t, x, {}});
}

double ProblemSpec::g_at(std::span<const double> x) const {
    return terminal_reward.eval({0.0, x, {}});
}

double ProblemSpec::cost_at(double t, std::span<const double> x, int impulse_index) const {
    const auto& xi = impulses[static_cast<std::size_t>(impulse_index)];
    return cost.eval({t, x, xi});
}

void ProblemSpec::drift_at(double t, std::span<const double> x, std::span<double> out) const {
    for (int i = 0; i < dim; ++i)
        out[static_cast<std::size_t>(i)] = drift[static_cast<std::size_t>(i)].eval({t, x, {}});
}

void ProblemSpec::diffusion_matrix_at(double t, std::span<const double> x,
                                      std::span<double> out) const {
    std::vector<double> s(static_cast<std::size_t>(dim * noise_dim));
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < noise_dim; ++j)
            s[static_cast<std::size_t>(i * noise_dim + j)] = sigma(i, j).eval({t, x, {}});
    for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < dim; ++j) {
            double acc = 0.0;
            for (int k = 0; k < noise_dim; ++k)
                acc += s[static_cast<std::size_t>(i * noise_dim + k)] *
                       s[static_cast<std::size_t>(j * noise_dim + k)];
            out[static_cast<std::size_t>(i * dim + j)] = acc;
        }
    }
}

std::vector<double> ProblemSpec::impulse_radius() const {
    std::vector<double> r(static_cast<std::size_t>(dim), 0.0);
    for (const auto& xi : impulses)
        for (int i = 0; i < dim; ++i)
            r[static_cast<std::size_t>(i)] =
                std::max(r[static_cast<std::size_t>(i)], std::fabs(xi[static_cast<std::size_t>(i)]));
    return r;
}

namespace {

std::vector<double> parse_vector(const std::string& value, const std::string& key) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= value.size()) {
        std::size_t comma = value.find(',', pos);
        std::string item = value.substr(pos, comma == std::string::npos ? std::string::npos
                                                                        : comma - pos);
        const char* begin = item.c_str();
        char* end = nullptr;
        double v = std::strtod(begin, &end);
        while (end && *end && std::isspace(static_cast<unsigned char>(*end))) ++end;
        if (end == begin || (end && *end) || !std::isfinite(v))
            throw ConfigError("key '" + key + "': malformed number '" + item + "'");
        out.push_back(v);
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (out.empty()) throw ConfigError("key '" + key + "': empty vector");
    return out;
}

Expr parse_coefficient(const std::string& value, const std::string& key) {
    try {
        return Expr::parse(value);
    } catch (const ParseError& e) {
        throw ConfigError("key '" + key + "': " + e.what() + " at offset " +
                          std::to_string(e.offset()));
    }
}

// key = "prefix.i" or "prefix.i.j"; returns indices or nullopt on mismatch.
bool split_indexed(const std::string& key, const std::string& prefix, int& i, int& j,
                   int want_indices) {
    if (key.size() <= prefix.size() + 1 || key.compare(0, prefix.size(), prefix) != 0 ||
        key[prefix.size()] != '.')
        return false;
    std::string rest = key.substr(prefix.size() + 1);
    std::vector<int> idx;
    std::size_t pos = 0;
    while (pos <= rest.size()) {
        std::size_t dot = rest.find('.', pos);
        std::string part = rest.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
        if (part.empty()) return false;
        for (char c : part)
            if (!std::isdigit(static_cast<unsigned char>(c))) return false;
        idx.push_back(std::atoi(part.c_str()));
        if (dot == std::string::npos) break;
        pos = dot + 1;
    }
    if (static_cast<int>(idx.size()) != want_indices) return false;
    i = idx[0];
    j = want_indices == 2 ? idx[1] : 0;
    return true;
}

void check_variable_domain(const Expr& e, const std::string& key, int dim, bool allow_t,
                           bool allow_xi) {
    if (!allow_t && e.uses_t())
        throw ConfigError("key '" + key + "': expression must not reference t");
    if (!allow_xi && e.uses_xi())
        throw ConfigError("key '" + key + "': expression must not reference xi");
    if (e.max_x_index() >= dim)
        throw ConfigError("key '" + key + "': x" + std::to_string(e.max_x_index()) +
                          " out of range for dim " + std::to_string(dim));
    if (allow_xi && e.max_xi_index() >= dim)
        throw ConfigError("key '" + key + "': xi" + std::to_string(e.max_xi_index()) +
                          " out of range for dim " + std::to_string(dim));
}

} // namespace

ProblemSpec parse_problem(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::size_t a = line.find_first_not_of(" \t\r");
        if (a == std::string::npos) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
        auto trim = [](std::string s) {
            std::size_t b = s.find_first_not_of(" \t\r");
            std::size_t e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        if (value.empty())
            throw ConfigError("line " + std::to_string(lineno) + ": key '" + key + "' has no value");
        if (kv.count(key))
            throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
        kv[key] = value;
    }

    auto take = [&kv](const std::string& key) {
        auto it = kv.find(key);
        if (it == kv.end()) throw ConfigError("missing required key '" + key + "'");
        std::string v = it->second;
        kv.erase(it);
        return v;
    };
    auto take_or = [&kv](const std::string& key, const std::string& fallback) {
        auto it = kv.find(key);
        if (it == kv.end()) return fallback;
        std::string v = it->second;
        kv.erase(it);
        return v;
    };

    ProblemSpec spec;
    {
        std::string v = take("dim");
        char* end = nullptr;
        long n = std::strtol(v.c_str(), &end, 10);
        if ((end && *end) || n < 1 || n > 16)
            throw ConfigError("key 'dim': expected integer in [1,16], got '" + v + "'");
        spec.dim = static_cast<int>(n);
    }
    {
        std::vector<double> v = parse_vector(take("horizon"), "horizon");
        if (v.size() != 1 || v[0] <= 0.0) throw ConfigError("key 'horizon': expected a positive real");
        spec.horizon = v[0];
    }
    {
        std::vector<double> v = parse_vector(take("cost_floor"), "cost_floor");
        if (v.size() != 1 || v[0] <= 0.0)
            throw ConfigError("key 'cost_floor': expected a positive real");
        spec.cost_floor = v[0];
    }

    spec.running_reward = parse_coefficient(take_or("running_reward", "0"), "running_reward");
    spec.terminal_reward = parse_coefficient(take("terminal_reward"), "terminal_reward");
    spec.cost = parse_coefficient(take("cost"), "cost");

    // Drift components default to 0.
    spec.drift.resize(static_cast<std::size_t>(spec.dim));
    for (int i = 0; i < spec.dim; ++i) {
        std::string key = "drift." + std::to_string(i);
        spec.drift[static_cast<std::size_t>(i)] = parse_coefficient(take_or(key, "0"), key);
    }

    // Diffusion: noise dimension inferred from the largest column index used.
    int noise_dim = 1;
    for (const auto& [key, value] : kv) {
        int i = 0, j = 0;
        if (split_indexed(key, "sigma", i, j, 2)) noise_dim = std::max(noise_dim, j + 1);
    }
    spec.noise_dim = noise_dim;
    spec.diffusion.resize(static_cast<std::size_t>(spec.dim * noise_dim));
    for (int i = 0; i < spec.dim; ++i) {
        for (int j = 0; j < noise_dim; ++j) {
            std::string key = "sigma." + std::to_string(i) + "." + std::to_string(j);
            spec.diffusion[static_cast<std::size_t>(i * noise_dim + j)] =
                parse_coefficient(take_or(key, "0"), key);
        }
    }

    // Impulse list: impulse.0 .. impulse.{m-1}, contiguous.
    for (int m = 0;; ++m) {
        std::string key = "impulse." + std::to_string(m);
        auto it = kv.find(key);
        if (it == kv.end()) break;
        std::vector<double> xi = parse_vector(it->second, key);
        if (static_cast<int>(xi.size()) != spec.dim)
            throw ConfigError("key '" + key + "': expected " + std::to_string(spec.dim) +
                              " components, got " + std::to_string(xi.size()));
        spec.impulses.push_back(std::move(xi));
        kv.erase(it);
    }
    if (spec.impulses.empty())
        throw ConfigError("missing required key 'impulse.0' (U must be nonempty)");

    if (!kv.empty()) {
        std::string msg = "unknown key(s):";
        for (const auto& [key, value] : kv) msg += " '" + key + "'";
        throw ConfigError(msg);
    }

    check_variable_domain(spec.running_reward, "running_reward", spec.dim, true, false);
    check_variable_domain(spec.terminal_reward, "terminal_reward", spec.dim, false, false);
    check_variable_domain(spec.cost, "cost", spec.dim, true, true);
    for (int i = 0; i < spec.dim; ++i)
        check_variable_domain(spec.drift[static_cast<std::size_t>(i)],
                              "drift." + std::to_string(i), spec.dim, true, false);
    for (int i = 0; i < spec.dim; ++i)
        for (int j = 0; j < noise_dim; ++j)
            check_variable_domain(spec.sigma(i, j),
                                  "sigma." + std::to_string(i) + "." + std::to_string(j), spec.dim,
                                  true, false);
    return spec;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

ProblemSpec load_problem(const std::string& path) {
    return parse_problem(read_file(path));
}

} // namespace iqvi
