#pragma once

// Effective drift F, diffusion D and its Cholesky factor A from Galerkin
// solutions of the cell problem.

#include "homog/gibbs.hpp"
#include "homog/poisson.hpp"
#include "homog/problem.hpp"

#include <Eigen/Core>

#include <memory>
#include <optional>
#include <utility>

namespace homog::coeffs {

struct EffectiveCoefficients {
  Eigen::VectorXd x;
  Eigen::VectorXd F;
  Eigen::MatrixXd D;
  Eigen::MatrixXd A;   // lower triangular, A A^T = D
  Eigen::MatrixXd A0;  // A0(i, j) = <psi_i, b_j>
};

/// F_i = sum_j <d psi_i / d x_j, b_j>.
Eigen::VectorXd effective_drift(const poisson::PoissonSolution& sol);

/// A0 = [<psi_i, b_j>]; D = alpha_avg + A0 + A0^T with alpha_avg the Gibbs
/// average of alpha alpha^T. Returns (D, A0).
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> effective_diffusion(const poisson::PoissonSolution& sol,
                                                                const Eigen::MatrixXd& alpha_avg);

/// Lower-triangular Cholesky factor of a positive semidefinite D.
Eigen::MatrixXd cholesky_factor(const Eigen::MatrixXd& D);

/// Gibbs average of alpha(x, .) alpha(x, .)^T; zero when alpha is empty.
Eigen::MatrixXd alpha_average(const poisson::CellSolver& solver,
                              const std::vector<std::vector<expr::Expression>>& alpha, const Eigen::VectorXd& x);

class EffectiveModel {
 public:
  virtual ~EffectiveModel() = default;
  virtual int dim() const = 0;
  virtual EffectiveCoefficients at(const Eigen::VectorXd& x) const = 0;
};

/// Effective coefficients at degree d backed by one assembled, factorized
/// stiffness matrix shared across all slow states.
class SpectralModel : public EffectiveModel {
 public:
  SpectralModel(const FastSlowProblem& problem, int d, const gibbs::FitOptions& fit = {},
                const poisson::AssemblyOptions& assembly = {});
  SpectralModel(const FastSlowProblem& problem, std::shared_ptr<const poisson::CellSolver> solver);

  int dim() const override { return problem_.m; }
  EffectiveCoefficients at(const Eigen::VectorXd& x) const override;
  poisson::PoissonSolution solution_at(const Eigen::VectorXd& x) const;

  const poisson::CellSolver& solver() const { return *solver_; }
  const FastSlowProblem& problem() const { return problem_; }

 private:
  void init();

  FastSlowProblem problem_;
  std::shared_ptr<const poisson::CellSolver> solver_;
  std::vector<std::vector<expr::Expression>> df_;
  bool alpha_depends_on_x_ = false;
  std::optional<Eigen::MatrixXd> alpha_cache_;
};

}  // namespace homog::coeffs
