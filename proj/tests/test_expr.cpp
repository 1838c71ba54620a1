#include <doctest.h>

#include <cmath>
#include <random>

#include "iqvi/expr.hpp"

using iqvi::EvalPoint;
using iqvi::Expr;

namespace {

double eval1(const Expr& e, double t, double x0) {
    double x[1] = {x0};
    return e.eval({t, std::span<const double>(x, 1), {}});
}

double eval1xi(const Expr& e, double t, double x0, double xi0) {
    double x[1] = {x0};
    double xi[1] = {xi0};
    return e.eval({t, std::span<const double>(x, 1), std::span<const double>(xi, 1)});
}

} // namespace

TEST_CASE("constant parses and evaluates anywhere") {
    Expr e = Expr::parse("1");
    CHECK(eval1(e, 0.0, 0.0) == 1.0);
    CHECK(eval1(e, 17.0, -3.5) == 1.0);
}

TEST_CASE("direct arithmetic with abs and t") {
    Expr e = Expr::parse("abs(x0) - 0.5*t");
    CHECK(eval1(e, 2.0, -3.0) == doctest::Approx(2.0));
}

TEST_CASE("exp identity at zero") {
    Expr e = Expr::parse("exp(t)");
    CHECK(eval1(e, 0.0, 0.0) == 1.0);
}

TEST_CASE("xi variables evaluate when supplied") {
    Expr e = Expr::parse("xi0 + x0");
    CHECK(eval1xi(e, 0.0, 1.0, 0.5) == doctest::Approx(1.5));
}

TEST_CASE("xi without a supplied impulse errors") {
    Expr e = Expr::parse("xi0 + x0");
    double x[1] = {1.0};
    CHECK_THROWS_AS(e.eval({0.0, std::span<const double>(x, 1), {}}), iqvi::EvalError);
}

TEST_CASE("division by zero is a domain error") {
    Expr e = Expr::parse("1/(x0 - x0)");
    CHECK_THROWS_AS(eval1(e, 0.0, 1.0), iqvi::EvalError);
}

TEST_CASE("sqrt of a negative is a domain error") {
    Expr e = Expr::parse("sqrt(x0)");
    CHECK(eval1(e, 0.0, 4.0) == 2.0);
    CHECK_THROWS_AS(eval1(e, 0.0, -1.0), iqvi::EvalError);
}

TEST_CASE("syntax errors carry the offending offset") {
    try {
        Expr::parse("x0*x0 + (T? no)");
        FAIL("expected ParseError");
    } catch (const iqvi::ParseError& e) {
        CHECK(e.offset() == 9); // the unknown identifier 'T'
    }
}

TEST_CASE("unknown identifiers are rejected") {
    CHECK_THROWS_AS(Expr::parse("y0 + 1"), iqvi::ParseError);
    CHECK_THROWS_AS(Expr::parse("foo(x0)"), iqvi::ParseError);
}

TEST_CASE("arity mismatches are rejected") {
    CHECK_THROWS_AS(Expr::parse("min(x0)"), iqvi::ParseError);
    CHECK_THROWS_AS(Expr::parse("abs(x0, t)"), iqvi::ParseError);
}

TEST_CASE("precedence: pow binds tighter than unary minus") {
    Expr e = Expr::parse("-x0^2");
    CHECK(eval1(e, 0.0, 3.0) == doctest::Approx(-9.0));
    Expr f = Expr::parse("(-x0)^2");
    CHECK(eval1(f, 0.0, 3.0) == doctest::Approx(9.0));
}

TEST_CASE("precedence: product over sum, pow right-associative") {
    Expr e = Expr::parse("2 + 3*4");
    CHECK(eval1(e, 0, 0) == 14.0);
    Expr f = Expr::parse("2^3^2"); // 2^(3^2) = 512
    CHECK(eval1(f, 0, 0) == 512.0);
    Expr g = Expr::parse("2*3^2");
    CHECK(eval1(g, 0, 0) == 18.0);
}

TEST_CASE("min, max, max0, pow function forms") {
    CHECK(eval1(Expr::parse("min(x0, t)"), 2.0, 5.0) == 2.0);
    CHECK(eval1(Expr::parse("max(x0, t)"), 2.0, 5.0) == 5.0);
    CHECK(eval1(Expr::parse("max0(x0)"), 0.0, -4.0) == 0.0);
    CHECK(eval1(Expr::parse("max0(x0)"), 0.0, 4.0) == 4.0);
    CHECK(eval1(Expr::parse("pow(x0, 3)"), 0.0, 2.0) == 8.0);
}

TEST_CASE("variable usage analysis") {
    Expr e = Expr::parse("x2 + xi1*t");
    CHECK(e.uses_t());
    CHECK(e.uses_xi());
    CHECK(e.max_x_index() == 2);
    CHECK(e.max_xi_index() == 1);
    Expr g = Expr::parse("x0*x0");
    CHECK(!g.uses_t());
    CHECK(!g.uses_xi());
}

TEST_CASE("print then re-parse reproduces the tree on curated cases") {
    for (const char* src : {
             "1", "x0", "xi3", "t", "-x0^2", "(-x0)^2", "x0 - (x1 - x2)", "x0 - x1 - x2",
             "2^3^2", "(2^3)^2", "-(x0*t)", "-x0*t", "min(x0, max(t, 0.5))",
             "abs(x0) - 0.5*t", "max0(1 - abs(x0))", "x0/(t + 1)", "pow(x0, -2)",
             "1/(x0 - x0)", "0.1 + 4*max0(t - 0.875)",
         }) {
        Expr a = Expr::parse(src);
        Expr b = Expr::parse(a.str());
        CAPTURE(src);
        CAPTURE(a.str());
        CHECK(a == b);
        CHECK(a.str() == b.str());
    }
}

namespace {

// Random tree builder for the round-trip property.
std::string random_expr(std::mt19937& rng, int depth) {
    std::uniform_int_distribution<int> pick(0, depth <= 0 ? 4 : 12);
    switch (pick(rng)) {
    case 0: return "t";
    case 1: return "x0";
    case 2: return "x1";
    case 3: return "xi0";
    case 4: {
        std::uniform_real_distribution<double> num(0.0, 10.0);
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.3f", num(rng));
        return buf;
    }
    case 5: return "(" + random_expr(rng, depth - 1) + " + " + random_expr(rng, depth - 1) + ")";
    case 6: return "(" + random_expr(rng, depth - 1) + " - " + random_expr(rng, depth - 1) + ")";
    case 7: return "(" + random_expr(rng, depth - 1) + ")*(" + random_expr(rng, depth - 1) + ")";
    case 8: return "(" + random_expr(rng, depth - 1) + ")/(" + random_expr(rng, depth - 1) + ")";
    case 9: return "-(" + random_expr(rng, depth - 1) + ")";
    case 10: return "abs(" + random_expr(rng, depth - 1) + ")";
    case 11: return "min(" + random_expr(rng, depth - 1) + ", " + random_expr(rng, depth - 1) + ")";
    default: return "max0(" + random_expr(rng, depth - 1) + ")";
    }
}

} // namespace

TEST_CASE("round-trip property on random trees") {
    std::mt19937 rng(20240817);
    for (int i = 0; i < 300; ++i) {
        std::string src = random_expr(rng, 4);
        Expr a = Expr::parse(src);
        Expr b = Expr::parse(a.str());
        CAPTURE(src);
        CHECK(a == b);
        // Printing is a fixed point after one round.
        CHECK(a.str() == b.str());
    }
}

TEST_CASE("evaluation agrees before and after a print round-trip") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> point(-3.0, 3.0);
    int checked = 0;
    for (int i = 0; i < 200; ++i) {
        std::string src = random_expr(rng, 3);
        Expr a = Expr::parse(src);
        Expr b = Expr::parse(a.str());
        double x[2] = {point(rng), point(rng)};
        double xi[1] = {point(rng)};
        EvalPoint p{point(rng), std::span<const double>(x, 2), std::span<const double>(xi, 1)};
        try {
            double va = a.eval(p);
            double vb = b.eval(p);
            CHECK(va == vb);
            ++checked;
        } catch (const iqvi::EvalError&) {
            // division by a random zero etc.; both trees must agree on that too
            CHECK_THROWS_AS(b.eval(p), iqvi::EvalError);
        }
    }
    CHECK(checked > 50);
}
