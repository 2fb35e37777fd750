#include "homog/coeffs.hpp"
#include "homog/errors.hpp"
#include "homog/gibbs.hpp"
#include "homog/oracle.hpp"
#include "homog/poisson.hpp"
#include "homog/problems.hpp"

#include <doctest.h>

#include <cmath>

using namespace homog;
using gibbs::GibbsMeasure;
using oracle::Box;

namespace {

const std::string kOuV = "y0^2/2 + 0.91893853320467274";

Box box1(double lo, double hi) { return Box{{lo}, {hi}}; }

// Max |phi - y| over |y| <= 3 after removing the weighted mean of y.
double ou_interior_error(int cells) {
  const auto V = expr::parse(kOuV, 1, 1);
  const auto g = oracle::fd_solve(V, expr::parse("y0", 1, 1), Eigen::VectorXd::Zero(1), box1(-8, 8), {cells});
  Eigen::VectorXd y(g.phi.size());
  for (Eigen::Index c = 0; c < y.size(); ++c) y(c) = g.point(c)(0);
  const double shift = g.average(y);
  double err = 0.0;
  for (Eigen::Index c = 0; c < y.size(); ++c)
    if (std::abs(y(c)) <= 3) err = std::max(err, std::abs(g.phi(c) - (y(c) - shift)));
  return err;
}

double bistable_l2(int d) {
  const auto p = problems::make("bistable");
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 1.2);
  const poisson::CellSolver s(GibbsMeasure::build(p.V, p.lambda), d);
  const auto grid = oracle::fd_solve(p.V, p.f[0], x, box1(-8, 8), {4096});
  return oracle::weighted_l2_error(grid, s, s.solve(s.rhs(p.f[0], x)));
}

}  // namespace

TEST_SUITE("oracle") {
  TEST_CASE("Ornstein-Uhlenbeck: phi = y in the interior") {
    CHECK(ou_interior_error(4096) <= 1e-5);
  }

  TEST_CASE("second-order mesh refinement") {
    const double coarse = ou_interior_error(512), fine = ou_interior_error(1024);
    CHECK(coarse / fine == doctest::Approx(4.0).epsilon(0.3));
  }

  TEST_CASE("zero source gives zero solution") {
    const auto g = oracle::fd_solve(expr::parse(kOuV, 1, 1), expr::parse("0", 1, 1), Eigen::VectorXd::Zero(1),
                                    box1(-8, 8), {256});
    CHECK(g.phi.cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("boundary mass checks") {
    const auto V = expr::parse(kOuV, 1, 1);
    const auto f = expr::parse("y0", 1, 1);
    const Eigen::VectorXd x = Eigen::VectorXd::Zero(1);
    CHECK_THROWS_AS(oracle::fd_solve(V, f, x, box1(-3, 3), {256}), DomainError);
    const auto warned = oracle::fd_solve(V, f, x, box1(-6, 6), {256});
    CHECK(warned.warnings.size() == 1);
    CHECK(oracle::fd_solve(V, f, x, box1(-8, 8), {256}).warnings.empty());
    CHECK_THROWS_AS(oracle::fd_solve(V, f, x, box1(-8, 8), {2}), UsageError);
  }

  TEST_CASE("centering and residual") {
    for (const char* name : {"bistable", "tilted_bistable"}) {
      const auto p = problems::make(name);
      const auto g = oracle::fd_solve(p.V, p.f[0], Eigen::VectorXd::Constant(1, 1.2),
                                      oracle::default_box(GibbsMeasure::build(p.V, p.lambda)), {4096});
      CHECK(std::abs(g.average(g.phi)) <= 1e-8);
      CHECK(g.residual <= 1e-10);
    }
    const auto p = problems::make("single_well_2d");
    const auto g = oracle::fd_solve(p.V, p.f[0], Eigen::VectorXd::Constant(2, 1.2),
                                    oracle::default_box(GibbsMeasure::build(p.V, p.lambda)), {96, 96});
    CHECK(std::abs(g.average(g.phi)) <= 1e-8);
    CHECK(g.residual <= 1e-10);
  }

  TEST_CASE("default box spans eight standard deviations") {
    const auto g = GibbsMeasure::build(expr::parse(kOuV, 1, 1), 1.0);
    const Box b = oracle::default_box(g);
    CHECK(b.lo[0] == doctest::Approx(-8.0).epsilon(1e-8));
    CHECK(b.hi[0] == doctest::Approx(8.0).epsilon(1e-8));
  }

  TEST_CASE("spectral solution against its own grid samples") {
    const auto V = expr::parse(kOuV, 1, 1);
    const auto f = expr::parse("y0", 1, 1);
    const poisson::CellSolver s(GibbsMeasure::build(V, 1.0), 2);
    const Eigen::VectorXd psi = s.solve(s.rhs(f, Eigen::VectorXd::Zero(1)));
    auto grid = oracle::fd_solve(V, f, Eigen::VectorXd::Zero(1), box1(-8, 8), {2048});
    for (Eigen::Index c = 0; c < grid.phi.size(); ++c)
      grid.phi(c) = s.evaluate(psi, grid.point(c)) / std::sqrt(grid.density(c));
    CHECK(oracle::weighted_l2_error(grid, s, psi) <= 1e-8);
  }

  TEST_CASE("Ornstein-Uhlenbeck spectral solution against the grid") {
    const auto V = expr::parse(kOuV, 1, 1);
    const auto f = expr::parse("y0", 1, 1);
    const poisson::CellSolver s(GibbsMeasure::build(V, 1.0), 2);
    const auto grid = oracle::fd_solve(V, f, Eigen::VectorXd::Zero(1), box1(-8, 8), {4096});
    CHECK(oracle::weighted_l2_error(grid, s, s.solve(s.rhs(f, Eigen::VectorXd::Zero(1)))) <= 1e-8);
  }

  TEST_CASE("bistable: spectral solution approaches the grid") {
    const double e4 = bistable_l2(4), e20 = bistable_l2(20);
    CHECK(e4 > e20);
    CHECK(e20 <= 1e-5);
  }

  TEST_CASE("grid coefficients: Ornstein-Uhlenbeck") {
    const auto p = problems::make("ou");
    const auto g = oracle::grid_coefficients(p, Eigen::VectorXd::Constant(1, 0.9), box1(-8, 8), {4096});
    CHECK(std::abs(g.F(0) - std::sin(0.9) * std::cos(0.9)) <= 1e-5);
    CHECK(std::abs(g.D(0, 0) - 2 * std::sin(0.9) * std::sin(0.9)) <= 1e-5);
    CHECK(g.solutions.size() == 1);
  }

  TEST_CASE("grid coefficients: two fast dimensions") {
    const auto p = problems::make("single_well_2d");
    const Eigen::VectorXd x = Eigen::VectorXd::Constant(2, 1.2);
    const auto grid = oracle::grid_coefficients(p, x, oracle::default_box(GibbsMeasure::build(p.V, p.lambda)), {128, 128});
    const auto spec = coeffs::SpectralModel(p, 16).at(x);
    CHECK(oracle::coefficient_error(grid.F, grid.D, spec.F, spec.D) <= 1e-2 * (1 + spec.D.cwiseAbs().maxCoeff()));
  }

  TEST_CASE("coefficient error") {
    const Eigen::VectorXd F = Eigen::VectorXd::Ones(2);
    const Eigen::MatrixXd D = Eigen::MatrixXd::Identity(2, 2);
    CHECK(oracle::coefficient_error(F, D, F, D) == 0.0);
    CHECK(oracle::coefficient_error(F, D, 2 * F, D) == 1.0);
    CHECK(oracle::coefficient_error(F, D, F, 4 * D) == 3.0);
    CHECK_THROWS_AS(oracle::coefficient_error(F, D, Eigen::VectorXd::Ones(3), D), UsageError);
  }
}
