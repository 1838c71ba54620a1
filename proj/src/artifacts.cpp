#include "iqvi/artifacts.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "iqvi/errors.hpp"
#include "iqvi/util.hpp"

namespace iqvi {

void Manifest::set_double(const std::string& key, double v) { entries[key] = format_double(v); }
void Manifest::set_int(const std::string& key, long v) { entries[key] = std::to_string(v); }

const std::string& Manifest::get(const std::string& key) const {
    auto it = entries.find(key);
    if (it == entries.end()) throw IoError("manifest is missing key '" + key + "'");
    return it->second;
}

double Manifest::get_double(const std::string& key) const {
    const std::string& v = get(key);
    char* end = nullptr;
    double out = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || (end && *end)) throw IoError("manifest key '" + key + "' is not a number");
    return out;
}

long Manifest::get_int(const std::string& key) const {
    const std::string& v = get(key);
    char* end = nullptr;
    long out = std::strtol(v.c_str(), &end, 10);
    if (end == v.c_str() || (end && *end)) throw IoError("manifest key '" + key + "' is not an integer");
    return out;
}

std::vector<double> Manifest::get_vector(const std::string& key) const {
    const std::string& v = get(key);
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= v.size()) {
        std::size_t comma = v.find(',', pos);
        std::string item = v.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        char* end = nullptr;
        double d = std::strtod(item.c_str(), &end);
        if (end == item.c_str()) throw IoError("manifest key '" + key + "' has a malformed vector");
        out.push_back(d);
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

std::vector<int> Manifest::get_int_vector(const std::string& key) const {
    std::vector<int> out;
    for (double v : get_vector(key)) out.push_back(static_cast<int>(std::lround(v)));
    return out;
}

void write_manifest(const std::string& path, const Manifest& manifest) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    for (const auto& [key, value] : manifest.entries) out << key << " = " << value << "\n";
}

Manifest read_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    Manifest manifest;
    std::string line;
    while (std::getline(in, line)) {
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            std::size_t b = s.find_first_not_of(" \t\r");
            std::size_t e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        std::string key = trim(line.substr(0, eq));
        if (!key.empty()) manifest.entries[key] = trim(line.substr(eq + 1));
    }
    return manifest;
}

std::string run_hash(const std::string& problem_text, const std::string& param_blob) {
    return hex64(fnv1a64(param_blob, fnv1a64(problem_text)));
}

namespace {

void open_out(std::ofstream& out, const std::string& path) {
    out.open(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
}

std::string header_row(int dim, const std::string& tail) {
    std::string h = "t";
    for (int i = 0; i < dim; ++i) h += ",x" + std::to_string(i);
    return h + "," + tail;
}

// Reads one CSV data line into fields (no quoting in our schema).
std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= line.size()) {
        std::size_t comma = line.find(',', pos);
        out.push_back(line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

struct CsvReader {
    std::ifstream in;
    std::string hash;
    std::map<std::string, std::string> comments;

    explicit CsvReader(const std::string& path) : in(path, std::ios::binary) {
        if (!in) throw IoError("cannot open '" + path + "'");
    }

    // Consumes leading "# key value" comments, returns the header line.
    std::string read_header() {
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            if (line[0] == '#') {
                std::istringstream ls(line.substr(1));
                std::string key, value;
                ls >> key;
                std::getline(ls, value);
                std::size_t b = value.find_first_not_of(' ');
                comments[key] = b == std::string::npos ? "" : value.substr(b);
                if (key == "run") hash = comments[key];
                continue;
            }
            return line;
        }
        throw IoError("file ended before the CSV header");
    }
};

} // namespace

void write_value_csv(const std::string& path, const SolveResult& result, const ProblemSpec& spec,
                     const GridSpec& grid, const std::string& hash) {
    std::ofstream out;
    open_out(out, path);
    out << "# run " << hash << "\n";
    out << header_row(spec.dim, "value") << "\n";
    const double dt = grid.time_step(spec.horizon);
    std::vector<double> x(static_cast<std::size_t>(grid.dim()));
    for (const ValueField& level : result.levels) {
        const std::string t = format_double(dt * level.time_index);
        for (std::size_t i = 0; i < level.values.size(); ++i) {
            grid.coords(i, x);
            out << t;
            for (double c : x) out << ',' << format_double(c);
            out << ',' << format_double(level.values[i]) << "\n";
        }
    }
}

std::vector<ValueField> read_value_csv(const std::string& path, const ProblemSpec& spec,
                                       const GridSpec& grid, std::string* hash_out) {
    CsvReader reader(path);
    std::string header = reader.read_header();
    if (header != header_row(spec.dim, "value"))
        throw IoError("'" + path + "': unexpected header '" + header + "'");
    if (hash_out) *hash_out = reader.hash;

    const std::size_t count = grid.node_count();
    std::vector<ValueField> levels;
    std::string line;
    std::size_t row = 0;
    while (std::getline(reader.in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields = split_csv(line);
        if (fields.size() != static_cast<std::size_t>(spec.dim) + 2)
            throw IoError("'" + path + "': malformed row " + std::to_string(row));
        std::size_t level_index = row / count;
        std::size_t node = row % count;
        if (node == 0) {
            levels.push_back(ValueField{static_cast<int>(level_index), {}});
            levels.back().values.resize(count);
        }
        levels.back().values[node] = std::strtod(fields.back().c_str(), nullptr);
        ++row;
    }
    if (row != count * levels.size() || levels.empty())
        throw IoError("'" + path + "': truncated value table");
    if (static_cast<int>(levels.size()) != grid.time_steps + 1)
        throw IoError("'" + path + "': level count does not match the grid");
    return levels;
}

void write_policy_csv(const std::string& path, const Policy& policy, const ProblemSpec& spec,
                      const GridSpec& grid, const std::string& hash) {
    std::ofstream out;
    open_out(out, path);
    out << "# run " << hash << "\n";
    out << "# contact_tol " << format_double(policy.contact_tol) << "\n";
    std::string tail = "action,impulse_index";
    for (int i = 0; i < spec.dim; ++i) tail += ",xi" + std::to_string(i);
    out << header_row(spec.dim, tail) << "\n";

    const double dt = grid.time_step(spec.horizon);
    std::vector<double> x(static_cast<std::size_t>(grid.dim()));
    for (int m = 0; m < policy.time_levels; ++m) {
        const std::string t = format_double(dt * m);
        for (std::size_t i = 0; i < policy.nodes; ++i) {
            grid.coords(i, x);
            out << t;
            for (double c : x) out << ',' << format_double(c);
            int j = policy.at(m, i);
            if (j < 0) {
                out << ",continue,-1";
                for (int r = 0; r < spec.dim; ++r) out << ",0";
            } else {
                out << ",impulse," << j;
                for (int r = 0; r < spec.dim; ++r)
                    out << ','
                        << format_double(
                               spec.impulses[static_cast<std::size_t>(j)][static_cast<std::size_t>(r)]);
            }
            out << "\n";
        }
    }
}

Policy read_policy_csv(const std::string& path, const ProblemSpec& spec, const GridSpec& grid,
                       std::string* hash_out) {
    CsvReader reader(path);
    reader.read_header();
    if (hash_out) *hash_out = reader.hash;

    Policy policy;
    policy.nodes = grid.node_count();
    policy.time_levels = grid.time_steps + 1;
    policy.impulse_index.assign(static_cast<std::size_t>(policy.time_levels) * policy.nodes, -1);
    policy.tie_count.assign(policy.impulse_index.size(), 0);
    auto it = reader.comments.find("contact_tol");
    if (it != reader.comments.end()) policy.contact_tol = std::strtod(it->second.c_str(), nullptr);

    std::string line;
    std::size_t row = 0;
    while (std::getline(reader.in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields = split_csv(line);
        if (fields.size() != static_cast<std::size_t>(2 * spec.dim) + 3)
            throw IoError("'" + path + "': malformed row " + std::to_string(row));
        if (row >= policy.impulse_index.size()) throw IoError("'" + path + "': too many rows");
        int j = std::atoi(fields[static_cast<std::size_t>(spec.dim) + 2].c_str());
        if (j >= static_cast<int>(spec.impulses.size()))
            throw IoError("'" + path + "': impulse index out of range at row " + std::to_string(row));
        policy.impulse_index[row] = j;
        ++row;
    }
    if (row != policy.impulse_index.size()) throw IoError("'" + path + "': truncated policy table");
    return policy;
}

void write_residual_csv(const std::string& path, const ResidualReport& report,
                        const ProblemSpec& spec, const GridSpec& grid, const std::string& hash) {
    std::ofstream out;
    open_out(out, path);
    out << "# run " << hash << "\n";
    out << header_row(spec.dim, "pde_residual,obstacle_slack,complementarity") << "\n";
    const double dt = grid.time_step(spec.horizon);
    std::vector<double> x(static_cast<std::size_t>(grid.dim()));
    for (std::size_t m = 0; m < report.complementarity.size(); ++m) {
        const std::string t = format_double(dt * static_cast<double>(m));
        for (std::size_t i = 0; i < report.complementarity[m].values.size(); ++i) {
            grid.coords(i, x);
            out << t;
            for (double c : x) out << ',' << format_double(c);
            out << ',' << format_double(report.pde[m].values[i]) << ','
                << format_double(report.obstacle[m].values[i]) << ','
                << format_double(report.complementarity[m].values[i]) << "\n";
        }
    }
}

void write_sim_csv(const std::string& path, const SimReport& report, const std::string& hash) {
    std::ofstream out;
    open_out(out, path);
    out << "# run " << hash << "\n";
    out << "path,J,impulses,total_cost\n";
    for (std::size_t p = 0; p < report.per_path.size(); ++p) {
        const PathStat& stat = report.per_path[p];
        out << p << ',' << format_double(stat.gain) << ',' << stat.impulses << ','
            << format_double(stat.total_cost) << "\n";
    }
}

void write_sim_summary(const std::string& path, const SimReport& report, const SimConfig& cfg,
                       const std::string& hash) {
    std::ofstream out;
    open_out(out, path);
    out << "run = " << hash << "\n";
    out << "rng = " << report.rng << "\n";
    out << "seed = " << cfg.seed << "\n";
    out << "paths = " << report.paths << "\n";
    out << "t0 = " << format_double(cfg.t0) << "\n";
    out << "x0 = " << join_doubles(cfg.x0) << "\n";
    out << "sim_dt = " << format_double(cfg.dt) << "\n";
    out << "antithetic = " << (cfg.antithetic ? 1 : 0) << "\n";
    out << "mean_J = " << format_double(report.mean) << "\n";
    out << "std_error = " << format_double(report.std_error) << "\n";
    out << "mean_total_cost = " << format_double(report.mean_cost) << "\n";
    out << "paths_outside_trust_region = " << report.flagged << "\n";
    out << "impulse_histogram = ";
    for (std::size_t k = 0; k < report.impulse_histogram.size(); ++k) {
        if (k) out << ',';
        out << report.impulse_histogram[k];
    }
    out << "\n";
}

} // namespace iqvi
