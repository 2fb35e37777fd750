#pragma once

// Brute-force finite-volume solver for the cell problem
//   -div(exp(-V) grad phi) = exp(-V) f
// on a box with zero-flux boundaries, in one or two fast dimensions.

#include "homog/coeffs.hpp"
#include "homog/expr.hpp"
#include "homog/gibbs.hpp"
#include "homog/poisson.hpp"

#include <Eigen/Core>

#include <string>
#include <vector>

namespace homog::oracle {

struct Box {
  std::vector<double> lo;
  std::vector<double> hi;
};

/// [mu - width sigma, mu + width sigma] per dimension from the fitted moments.
Box default_box(const gibbs::GibbsMeasure& g, double width = 8.0);

struct GridSolution {
  int dim = 0;
  Box box;
  std::vector<int> cells;
  std::vector<double> h;
  std::vector<Eigen::VectorXd> nodes;  // cell centres per dimension
  Eigen::VectorXd phi;                 // cell values, last dimension fastest
  Eigen::VectorXd density;             // exp(-V) / Z_grid at cell centres
  double residual = 0.0;               // relative residual of the discrete system
  std::vector<std::string> warnings;

  /// Cell centre of flat index c.
  Eigen::VectorXd point(Eigen::Index c) const;
  double cell_volume() const;
  /// Discrete weighted average sum_c vol density_c v_c.
  double average(const Eigen::VectorXd& v) const;
};

/// Solves at frozen slow state x. Throws DomainError when the normalized
/// density exp(-V)/Z on the box boundary exceeds 1e-6; above 1e-12 a warning
/// is recorded.
GridSolution fd_solve(const expr::Expression& V, const expr::Expression& f, const Eigen::VectorXd& x, const Box& box,
                      const std::vector<int>& cells);

/// Discrete integral of (phi_grid sqrt(rho) - psi_d)^2 with both sides
/// shifted to weighted mean zero.
double weighted_l2_error(const GridSolution& grid, const poisson::CellSolver& solver, const Eigen::VectorXd& psi);

/// Effective F and D at x from grid solutions for every f_i and d f_i / d x_j.
struct GridCoefficients {
  Eigen::VectorXd F;
  Eigen::MatrixXd D;
  std::vector<GridSolution> solutions;  // one per f_i
};
GridCoefficients grid_coefficients(const FastSlowProblem& problem, const Eigen::VectorXd& x, const Box& box,
                                   const std::vector<int>& cells);

/// max(|F_a - F_b|_inf, |D_a - D_b|_inf).
double coefficient_error(const Eigen::VectorXd& F_a, const Eigen::MatrixXd& D_a, const Eigen::VectorXd& F_b,
                         const Eigen::MatrixXd& D_b);

}  // namespace homog::oracle
