#include <doctest.h>

#include <cmath>

#include "iqvi/errors.hpp"
#include "iqvi/problem.hpp"
#include "iqvi/validate.hpp"

using namespace iqvi;

namespace {

std::string minimal_config(const std::string& cost, const std::string& terminal,
                           const std::string& impulses = "impulse.0 = -0.5\nimpulse.1 = 0.5\n",
                           const std::string& floor = "0.1") {
    return "dim = 1\nhorizon = 1\nsigma.0.0 = 0.5\nterminal_reward = " + terminal +
           "\ncost = " + cost + "\ncost_floor = " + floor + "\n" + impulses;
}

GridSpec small_grid() {
    GridSpec grid;
    grid.lower = {-2.0};
    grid.upper = {2.0};
    grid.nodes = {21};
    grid.time_steps = 10;
    return grid;
}

} // namespace

TEST_CASE("config parses with defaults for drift and running reward") {
    ProblemSpec spec = parse_problem(minimal_config("0.1", "0"));
    CHECK(spec.dim == 1);
    CHECK(spec.noise_dim == 1);
    CHECK(spec.horizon == 1.0);
    CHECK(spec.impulses.size() == 2);
    CHECK(spec.cost_floor == 0.1);
    double x[1] = {0.3};
    CHECK(spec.f_at(0.5, std::span<const double>(x, 1)) == 0.0);
    std::vector<double> b(1);
    spec.drift_at(0.2, std::span<const double>(x, 1), b);
    CHECK(b[0] == 0.0);
}

TEST_CASE("missing required keys are rejected by name") {
    std::string cfg = minimal_config("0.1", "0");
    std::string no_horizon;
    for (std::size_t pos = 0; pos < cfg.size();) {
        std::size_t eol = cfg.find('\n', pos);
        std::string line = cfg.substr(pos, eol - pos);
        if (line.find("horizon") == std::string::npos) no_horizon += line + "\n";
        pos = eol + 1;
    }
    try {
        parse_problem(no_horizon);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("horizon") != std::string::npos);
    }
}

TEST_CASE("unknown keys are an error") {
    CHECK_THROWS_AS(parse_problem(minimal_config("0.1", "0") + "mystery = 1\n"), ConfigError);
}

TEST_CASE("impulse vectors must match the dimension") {
    CHECK_THROWS_AS(parse_problem(minimal_config("0.1", "0", "impulse.0 = 0.5,0.5\n")),
                    ConfigError);
}

TEST_CASE("expressions referencing out-of-range variables are rejected") {
    CHECK_THROWS_AS(parse_problem(minimal_config("0.1", "x1")), ConfigError);
    // g may not depend on t or xi
    CHECK_THROWS_AS(parse_problem(minimal_config("0.1", "t")), ConfigError);
    CHECK_THROWS_AS(parse_problem(minimal_config("0.1", "xi0")), ConfigError);
    // drift may not depend on xi
    CHECK_THROWS_AS(parse_problem(minimal_config("0.1", "0") + "drift.0 = xi0\n"), ConfigError);
}

TEST_CASE("diffusion matrix assembles sigma sigma^T") {
    std::string cfg =
        "dim = 2\nhorizon = 1\nsigma.0.0 = 0.4\nsigma.0.1 = 0\nsigma.1.0 = 0.12\nsigma.1.1 = 0.4\n"
        "terminal_reward = 0\ncost = 0.2\ncost_floor = 0.2\nimpulse.0 = 0.5,0\n";
    ProblemSpec spec = parse_problem(cfg);
    CHECK(spec.noise_dim == 2);
    double x[2] = {0.0, 0.0};
    std::vector<double> a(4);
    spec.diffusion_matrix_at(0.0, std::span<const double>(x, 2), a);
    CHECK(a[0] == doctest::Approx(0.16));
    CHECK(a[1] == doctest::Approx(0.048));
    CHECK(a[2] == doctest::Approx(0.048));
    CHECK(a[3] == doctest::Approx(0.0144 + 0.16));
}

TEST_CASE("zero cost fails the H3 floor with a witness") {
    ProblemSpec spec = parse_problem(minimal_config("0", "0"));
    ValidationReport rep = validate_problem(spec, small_grid(), 1e-12);
    CHECK(!rep.h3_cost_floor.pass);
    CHECK(rep.h3_cost_floor.worst == doctest::Approx(0.1)); // k - c = 0.1
    CHECK(rep.h3_cost_floor.where_xi >= 0);
    CHECK(!rep.all_pass());
}

TEST_CASE("flat cost over zero terminal reward passes H4") {
    // sup_xi [g(x+xi) - c] = -0.1 <= 0 = g(x)
    ProblemSpec spec = parse_problem(minimal_config("0.1", "0"));
    ValidationReport rep = validate_problem(spec, small_grid(), 0.0);
    CHECK(rep.h4_terminal.pass);
    CHECK(rep.h3_cost_floor.pass);
    CHECK(rep.all_pass());
}

TEST_CASE("subadditivity holds for the additive cost example") {
    // c = 0.1 + |xi|, U = {0.2, 0.3, 0.5}: c(0.5) = 0.6 <= c(0.2) + c(0.3) = 0.9
    ProblemSpec spec = parse_problem(minimal_config(
        "0.1 + abs(xi0)", "0", "impulse.0 = 0.2\nimpulse.1 = 0.3\nimpulse.2 = 0.5\n"));
    ValidationReport rep = validate_problem(spec, small_grid(), 0.0);
    CHECK(rep.h3_subadditive.pass);
}

TEST_CASE("superadditive cost fails subadditivity") {
    // c = 0.1 + xi^2 doubles too slowly: c(0.5) = 0.35 > c(0.2)+c(0.3) = 0.33? No:
    // 0.1+0.25 = 0.35 vs 0.14+0.19 = 0.33, so the sum impulse is too expensive.
    ProblemSpec spec = parse_problem(minimal_config(
        "0.1 + xi0*xi0", "0", "impulse.0 = 0.2\nimpulse.1 = 0.3\nimpulse.2 = 0.5\n"));
    ValidationReport rep = validate_problem(spec, small_grid(), 1e-12);
    CHECK(!rep.h3_subadditive.pass);
    CHECK(rep.h3_subadditive.worst == doctest::Approx(0.02));
}

TEST_CASE("H4 fails when a maturity impulse pays") {
    // Hat reward with a flat cheap cost: jumping to the peak at T gains 0.4.
    ProblemSpec spec = parse_problem(minimal_config("0.1", "max0(1 - abs(x0))"));
    ValidationReport rep = validate_problem(spec, small_grid(), 1e-9);
    CHECK(!rep.h4_terminal.pass);
    CHECK(rep.h4_terminal.worst == doctest::Approx(0.4));
    REQUIRE(rep.h4_terminal.where_x.size() == 1);
    REQUIRE(rep.h4_terminal.where_xi >= 0);
    // the recorded witness reproduces the recorded violation
    double x = rep.h4_terminal.where_x[0];
    double shifted[1] = {x + spec.impulses[static_cast<std::size_t>(rep.h4_terminal.where_xi)][0]};
    double there[1] = {x};
    double violation = spec.g_at(std::span<const double>(shifted, 1)) -
                       spec.cost_at(1.0, std::span<const double>(there, 1), rep.h4_terminal.where_xi) -
                       spec.g_at(std::span<const double>(there, 1));
    CHECK(violation == doctest::Approx(rep.h4_terminal.worst));
}

TEST_CASE("evaluation errors are reported as failures with location, not thrown") {
    ProblemSpec spec = parse_problem(minimal_config("0.1", "sqrt(x0)")); // negative x!
    ValidationReport rep = validate_problem(spec, small_grid(), 0.0);
    CHECK(!rep.all_pass());
    CHECK(!rep.h2_rewards.pass);
    CHECK(rep.h2_rewards.note.find("evaluation error") != std::string::npos);
}

TEST_CASE("validation is deterministic") {
    ProblemSpec spec = parse_problem(minimal_config("0.1 + abs(xi0)", "max0(1 - abs(x0))"));
    ValidationReport a = validate_problem(spec, small_grid(), 1e-9);
    ValidationReport b = validate_problem(spec, small_grid(), 1e-9);
    CHECK(a.summary() == b.summary());
}

TEST_CASE("lipschitz estimate reflects the drift slope") {
    ProblemSpec spec = parse_problem(minimal_config("0.1", "0") + "drift.0 = 2*x0\n");
    ValidationReport rep = validate_problem(spec, small_grid(), 1e-9);
    CHECK(rep.lipschitz_estimate == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(rep.sup_drift == doctest::Approx(4.0)); // |2x| on [-2, 2]
}

TEST_CASE("shipped instances pass validation") {
    const char* dir = std::getenv("IMPULSE_QVI_INSTANCES");
    REQUIRE(dir != nullptr);
    struct Case {
        const char* file;
        GridSpec grid;
    };
    GridSpec hat{{-2}, {2}, {41}, 20};
    GridSpec gauss{{-6}, {6}, {49}, 20};
    GridSpec det{{-2}, {2}, {9}, 8};
    GridSpec two{{-1.6, -1.6}, {1.6, 1.6}, {9, 9}, 10};
    for (const Case& c : {Case{"hat.cfg", hat}, Case{"gaussian.cfg", gauss},
                          Case{"deterministic.cfg", det}, Case{"twodim.cfg", two}}) {
        ProblemSpec spec = load_problem(std::string(dir) + "/" + c.file);
        ValidationReport rep = validate_problem(spec, c.grid, 1e-9);
        CAPTURE(c.file);
        CAPTURE(rep.summary());
        CHECK(rep.all_pass());
    }
}
