#pragma once

// Galerkin solution of the transformed cell problem -H psi = exp(-V/2) f in
// the Hermite-function basis, with rank-one deflation of the kernel direction
// sqrt(exp(-V)/Z).

#include "homog/expr.hpp"
#include "homog/gibbs.hpp"
#include "homog/hermite.hpp"
#include "homog/quadrature.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <functional>
#include <vector>

namespace homog::poisson {

struct AssemblyOptions {
  int nodes_per_dim = 0;  // 0: quadrature::default_assembly_nodes(d)
  std::size_t node_cap = quadrature::kDefaultNodeCap;
  double solve_tolerance = 1e-9;
};

/// Per-node polynomial values B(q, alpha) = H_alpha(z_q) for a tensor rule.
Eigen::MatrixXd nodal_polynomials(const hermite::HermiteBasis& basis, const quadrature::QuadratureRule& rule);

/// Stiffness A = diag(lambda_alpha) + B^T diag(w (W - W_{mu,Sigma})) B, built
/// in fixed-width column blocks distributed over OpenMP threads. The result
/// does not depend on the thread count.
Eigen::MatrixXd assemble_stiffness(const gibbs::GibbsMeasure& g, const hermite::HermiteBasis& basis,
                                   const quadrature::QuadratureRule& rule, const Eigen::MatrixXd& B);

/// Serial reference assembly through monomial moments
/// I_gamma = sum_q w_q (W - W_{mu,Sigma})(q) q^gamma and the monomial
/// expansion of the basis. Ill-conditioned for large d; used for testing.
Eigen::MatrixXd assemble_stiffness_reference(const gibbs::GibbsMeasure& g, const hermite::HermiteBasis& basis,
                                             const quadrature::QuadratureRule& rule);

struct PoissonSolution {
  Eigen::VectorXd x;
  Eigen::MatrixXd rhs;                     // column i: b for f_i
  Eigen::MatrixXd psi;                     // column i: coefficients of psi_i
  std::vector<Eigen::MatrixXd> grad_rhs;   // [j] column i: d b_i / d x_j
  std::vector<Eigen::MatrixXd> grad_psi;   // [j] column i: d psi_i / d x_j
};

class CellSolver {
 public:
  CellSolver(const gibbs::GibbsMeasure& g, int d, const AssemblyOptions& options = {});

  const gibbs::GibbsMeasure& gibbs() const noexcept { return gibbs_; }
  const hermite::HermiteBasis& basis() const noexcept { return basis_; }
  const quadrature::QuadratureRule& rule() const noexcept { return rule_; }
  const Eigen::MatrixXd& nodal() const noexcept { return B_; }
  const Eigen::MatrixXd& stiffness() const noexcept { return A_; }
  const Eigen::VectorXd& kernel() const noexcept { return k_; }
  double deflation_weight() const noexcept { return sigma_; }
  int degree() const noexcept { return basis_.degree(); }

  /// b_alpha = sum_q w_q r(q) f(x, q) H_alpha(z_q) with r = sqrt(exp(-V)/(Z G)).
  Eigen::VectorXd rhs(const expr::Expression& f, const Eigen::VectorXd& x) const;
  Eigen::MatrixXd rhs(const std::vector<expr::Expression>& f, const Eigen::VectorXd& x) const;

  /// Solves (A + s k k^T) psi = b for each column, refines to the configured
  /// relative residual, then (if `project`) removes the kernel component.
  Eigen::MatrixXd solve(const Eigen::MatrixXd& b, bool project = true) const;

  /// df[j][i] = d f_i / d x_j.
  PoissonSolution solve_at(const std::vector<expr::Expression>& f,
                           const std::vector<std::vector<expr::Expression>>& df, const Eigen::VectorXd& x) const;

  /// sum_q w_q r(q)^2 g(q): the average of g against exp(-V)/Z.
  double gibbs_average(const std::function<double(const Eigen::VectorXd&)>& g) const;

  /// sum_alpha psi_alpha h_alpha(y).
  double evaluate(const Eigen::VectorXd& psi, const Eigen::VectorXd& y) const;

  /// Relative residual |(A + s k k^T) psi - b|_inf / |b|_inf.
  double deflated_residual(const Eigen::VectorXd& psi, const Eigen::VectorXd& b) const;

 private:
  gibbs::GibbsMeasure gibbs_;
  hermite::HermiteBasis basis_;
  quadrature::QuadratureRule rule_;
  Eigen::MatrixXd B_;
  Eigen::MatrixXd A_;
  Eigen::VectorXd k_;
  Eigen::VectorXd k_hat_;
  Eigen::VectorXd ratio_weights_;  // w_q r(q)
  Eigen::VectorXd density_weights_;  // w_q r(q)^2
  double sigma_ = 0.0;
  double tolerance_;
  Eigen::MatrixXd deflated_;
  Eigen::LDLT<Eigen::MatrixXd> ldlt_;
};

/// Symbolic d f_i / d x_j for all i, j: result[j][i].
std::vector<std::vector<expr::Expression>> slow_gradients(const std::vector<expr::Expression>& f, int m);

}  // namespace homog::poisson
