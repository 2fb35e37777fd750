#include "homog/errors.hpp"
#include "homog/expr.hpp"
#include "homog/problems.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

using namespace homog;
using expr::Expression;
using expr::Var;

namespace {

double eval(const Expression& e, std::vector<double> x, std::vector<double> y) { return e.evaluate(x, y); }

// Random expression trees over (m, n) variables. Division and sqrt are
// guarded so that evaluation stays inside the domain.
struct ExprGen {
  std::mt19937_64 rng;
  int m, n;

  std::string leaf() {
    std::uniform_int_distribution<int> pick(0, 2);
    switch (pick(rng)) {
      case 0: {
        std::uniform_real_distribution<double> c(-2.0, 2.0);
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3f", c(rng));
        return buf[0] == '-' ? std::string("(") + buf + ")" : buf;
      }
      case 1:
        if (m > 0) return "x" + std::to_string(std::uniform_int_distribution<int>(0, m - 1)(rng));
        [[fallthrough]];
      default:
        return "y" + std::to_string(std::uniform_int_distribution<int>(0, n - 1)(rng));
    }
  }

  std::string tree(int depth) {
    if (depth == 0) return leaf();
    std::uniform_int_distribution<int> pick(0, 9);
    const std::string a = tree(depth - 1);
    switch (pick(rng)) {
      case 0: return "(" + a + " + " + tree(depth - 1) + ")";
      case 1: return "(" + a + " - " + tree(depth - 1) + ")";
      case 2: return "(" + a + " * " + tree(depth - 1) + ")";
      case 3: return "(" + a + " / (2 + (" + tree(depth - 1) + ")^2))";
      case 4: return "(" + a + ")^" + std::to_string(std::uniform_int_distribution<int>(0, 3)(rng));
      case 5: return "sin(" + a + ")";
      case 6: return "cos(" + a + ")";
      case 7: return "exp(" + a + "/4)";
      case 8: return "sqrt(1 + (" + a + ")^2)";
      default: return "-" + a;
    }
  }

  std::vector<double> point(int k) {
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    std::vector<double> v(static_cast<std::size_t>(k));
    for (auto& e : v) e = u(rng);
    return v;
  }
};

double central_difference(const Expression& e, Var v, std::vector<double> x, std::vector<double> y, double h) {
  auto& slot = v.kind == expr::VarKind::slow ? x[static_cast<std::size_t>(v.index)] : y[static_cast<std::size_t>(v.index)];
  const double c = slot;
  slot = c + h;
  const double fp = e.evaluate(x, y);
  slot = c - h;
  const double fm = e.evaluate(x, y);
  return (fp - fm) / (2 * h);
}

}  // namespace

TEST_SUITE("expr") {
  TEST_CASE("parse and evaluate") {
    const auto e = expr::parse("y0^2/2", 0, 1);
    CHECK(eval(e, {}, {2.0}) == doctest::Approx(2.0).epsilon(1e-15));
    const auto s = expr::parse("sin(x0 + y0 + y1)", 1, 2);
    CHECK(eval(s, {0.1}, {0.2, 0.3}) == doctest::Approx(std::sin(0.6)).epsilon(1e-15));
    CHECK(eval(problems::make("single_well_2d").V, {0.0, 0.0}, {0.0, 0.0}) == 0.0);
    CHECK(std::abs(eval(problems::make("three_well").V, {0.0, 0.0}, {1.0, 0.0})) < 1e-15);
  }

  TEST_CASE("precedence and unary minus") {
    CHECK(eval(expr::parse("-y0^2", 0, 1), {}, {3.0}) == -9.0);
    CHECK(eval(expr::parse("2*3+4", 0, 1), {}, {0.0}) == 10.0);
    CHECK(eval(expr::parse("2*(3+4)", 0, 1), {}, {0.0}) == 14.0);
    CHECK(eval(expr::parse("8/4/2", 0, 1), {}, {0.0}) == 1.0);
    CHECK(eval(expr::parse("1e-3 * y0", 0, 1), {}, {2.0}) == doctest::Approx(2e-3));
  }

  TEST_CASE("syntax errors carry the offset") {
    try {
      expr::parse("y0 +", 0, 1);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.offset() == 4);
    }
    CHECK_THROWS_AS(expr::parse("y1", 0, 1), ParseError);
    CHECK_THROWS_AS(expr::parse("x0", 0, 1), ParseError);
    CHECK_THROWS_AS(expr::parse("y0^-1", 0, 1), ParseError);
    CHECK_THROWS_AS(expr::parse("y0^1.5", 0, 1), ParseError);
    CHECK_THROWS_AS(expr::parse("foo(y0)", 0, 1), ParseError);
    CHECK_THROWS_AS(expr::parse("(y0", 0, 1), ParseError);
    CHECK_THROWS_AS(expr::parse("", 0, 1), ParseError);
  }

  TEST_CASE("domain errors") {
    CHECK_THROWS_AS(eval(expr::parse("1/y0", 0, 1), {}, {0.0}), DomainError);
    CHECK_THROWS_AS(eval(expr::parse("sqrt(y0)", 0, 1), {}, {-1.0}), DomainError);
  }

  TEST_CASE("differentiation examples") {
    const auto V = expr::parse("y0^2/2", 0, 1);
    const auto dV = expr::differentiate(V, Var::fast(0));
    CHECK(eval(dV, {}, {1.7}) == doctest::Approx(1.7).epsilon(1e-15));
    const auto ds = expr::differentiate(expr::parse("sin(y0)", 0, 1), Var::fast(0));
    CHECK(eval(ds, {}, {0.4}) == doctest::Approx(std::cos(0.4)).epsilon(1e-15));
    const auto dx = expr::differentiate(expr::parse("y0", 1, 1), Var::slow(0));
    CHECK(dx.is_constant());
    CHECK(dx.constant_value() == 0.0);
  }

  TEST_CASE("generator examples") {
    const auto V = expr::parse("y0^2/2", 0, 1);
    const auto L1 = expr::apply_generator(V, expr::parse("y0", 0, 1));
    const auto L2 = expr::apply_generator(V, expr::parse("y0^2", 0, 1));
    for (double y : {-1.3, 0.0, 0.7, 2.5}) {
      CHECK(eval(L1, {}, {y}) == doctest::Approx(-y));
      CHECK(eval(L2, {}, {y}) == doctest::Approx(2 - 2 * y * y));
    }
  }

  TEST_CASE("generator matches finite differences on the 2D well") {
    const auto V = problems::make("single_well_2d").V;
    const auto g = expr::parse("cos(x0 + y0 + y1)", 2, 2);
    const auto Lg = expr::apply_generator(V, g);
    ExprGen gen{std::mt19937_64(11), 2, 2};
    const double h = 1e-4;
    for (int t = 0; t < 10; ++t) {
      const auto x = gen.point(2);
      const auto y = gen.point(2);
      double lap = 0.0, drift = 0.0;
      for (int j = 0; j < 2; ++j) {
        auto yp = y, ym = y;
        yp[j] += h;
        ym[j] -= h;
        lap += (eval(g, x, yp) - 2 * eval(g, x, y) + eval(g, x, ym)) / (h * h);
        drift += central_difference(V, Var::fast(j), x, y, 1e-6) * central_difference(g, Var::fast(j), x, y, 1e-6);
      }
      const double fd = lap - drift;
      CHECK(std::abs(eval(Lg, x, y) - fd) <= 1e-6 * (1 + std::abs(fd)));
    }
  }

  TEST_CASE("generator equals its assembly from derivatives") {
    ExprGen gen{std::mt19937_64(5), 1, 2};
    for (int t = 0; t < 20; ++t) {
      const auto V = expr::parse(gen.tree(3), 1, 2);
      const auto g = expr::parse(gen.tree(3), 1, 2);
      const auto Lg = expr::apply_generator(V, g);
      Expression manual(1, 2);
      for (int j = 0; j < 2; ++j) {
        const auto gj = expr::differentiate(g, Var::fast(j));
        manual = manual + expr::differentiate(gj, Var::fast(j)) - expr::differentiate(V, Var::fast(j)) * gj;
      }
      for (int k = 0; k < 5; ++k) {
        const auto x = gen.point(1), y = gen.point(2);
        CHECK(std::abs(eval(Lg, x, y) - eval(manual, x, y)) <= 1e-12 * (1 + std::abs(eval(manual, x, y))));
      }
    }
  }

  TEST_CASE("derivatives of built-in problems match central differences") {
    std::mt19937_64 rng(3);
    for (const auto& name : problems::names()) {
      if (name == "spde") continue;
      const auto p = problems::make(name);
      std::vector<Expression> exprs = {p.V};
      exprs.insert(exprs.end(), p.f.begin(), p.f.end());
      std::uniform_real_distribution<double> u(-1.2, 1.2);
      for (const auto& e : exprs) {
        std::vector<Var> vars;
        for (int i = 0; i < p.m; ++i) vars.push_back(Var::slow(i));
        for (int j = 0; j < p.n; ++j) vars.push_back(Var::fast(j));
        for (Var v : vars) {
          const auto de = expr::differentiate(e, v);
          for (int t = 0; t < 100; ++t) {
            std::vector<double> x(static_cast<std::size_t>(p.m)), y(static_cast<std::size_t>(p.n));
            for (auto& a : x) a = u(rng);
            for (auto& a : y) a = u(rng);
            const double exact = eval(de, x, y);
            const double fd = central_difference(e, v, x, y, 1e-5);
            CHECK(std::abs(exact - fd) <= 1e-5 * (1 + std::abs(exact)));
          }
        }
      }
    }
  }

  TEST_CASE("derivatives of random trees match central differences") {
    ExprGen gen{std::mt19937_64(17), 2, 2};
    for (int t = 0; t < 200; ++t) {
      const auto e = expr::parse(gen.tree(4), 2, 2);
      for (Var v : {Var::slow(0), Var::slow(1), Var::fast(0), Var::fast(1)}) {
        const auto de = expr::differentiate(e, v);
        const auto x = gen.point(2), y = gen.point(2);
        const double exact = eval(de, x, y);
        const double fd = central_difference(e, v, x, y, 1e-5);
        CHECK(std::abs(exact - fd) <= 1e-5 * (1 + std::abs(exact)));
      }
    }
  }

  TEST_CASE("printing round-trips") {
    ExprGen gen{std::mt19937_64(23), 2, 3};
    for (int t = 0; t < 200; ++t) {
      const auto e = expr::parse(gen.tree(4), 2, 3);
      const auto r = expr::parse(e.str(), 2, 3);
      for (int k = 0; k < 5; ++k) {
        const auto x = gen.point(2), y = gen.point(3);
        CHECK(eval(r, x, y) == eval(e, x, y));
      }
    }
  }

  TEST_CASE("constant folding and substitution") {
    const auto c = expr::parse("2*3 + 1", 0, 1);
    CHECK(c.is_constant());
    CHECK(c.constant_value() == 7.0);
    const auto e = expr::parse("y0^2 + y1", 0, 2);
    const auto s = expr::substitute_fast(e, 0, expr::parse("y1 + 1", 0, 2));
    CHECK(eval(s, {}, {5.0, 2.0}) == 11.0);
  }
}
