#pragma once

// Invariant measure exp(-V)/Z of the fast gradient dynamics: normalization,
// fitted first and second moments, the scaled basis covariance
// Sigma = lambda * C, and the transformed potential W = |grad V|^2/4 - Delta V/2.

#include "homog/expr.hpp"
#include "homog/hermite.hpp"

#include <Eigen/Core>

#include <vector>

namespace homog::gibbs {

struct FitOptions {
  int fit_nodes = 0;  // per dimension; 0 picks by dimension (400, 200, 64, then 24)
  double proposal_inflation = 3.0;
  int descent_steps = 100;
};

/// Per-dimension fitting nodes actually used for dimension n.
int fit_nodes_for(const FitOptions& options, int n);

class GibbsMeasure {
 public:
  /// Fits Z, mean and covariance of exp(-V) by importance-weighted
  /// Gauss-Hermite quadrature around a mode found by gradient descent.
  static GibbsMeasure build(const expr::Expression& V, double lambda, const FitOptions& options = {});

  int dim() const noexcept { return n_; }
  const expr::Expression& V() const noexcept { return V_; }
  const expr::Expression& W() const noexcept { return W_; }
  const std::vector<expr::Expression>& grad_V() const noexcept { return grad_V_; }
  double lambda() const noexcept { return lambda_; }
  double Z() const;
  double log_Z() const noexcept { return log_Z_; }
  const Eigen::VectorXd& mode() const noexcept { return mode_; }
  const Eigen::VectorXd& mean() const noexcept { return mean_; }
  const Eigen::MatrixXd& raw_cov() const noexcept { return cov_; }
  Eigen::MatrixXd sigma() const { return lambda_ * cov_; }
  const FitOptions& options() const noexcept { return options_; }

  double potential(const Eigen::VectorXd& y) const;
  double transformed_potential(const Eigen::VectorXd& y) const;
  /// log of exp(-V)/Z.
  double log_density(const Eigen::VectorXd& y) const { return -potential(y) - log_Z_; }

  /// sqrt(exp(-V(y)) / (Z G_{mu,Sigma}(y))) for the basis Gaussian.
  double density_ratio_sqrt(const hermite::HermiteBasis& basis, const Eigen::VectorXd& y) const;

  /// Basis of degree d centred on the fitted mean with covariance lambda * C.
  hermite::HermiteBasis basis(int d) const;

 private:
  GibbsMeasure() = default;

  int n_ = 0;
  expr::Expression V_;
  expr::Expression W_;
  std::vector<expr::Expression> grad_V_;
  double lambda_ = 1.0;
  double log_Z_ = 0.0;
  Eigen::VectorXd mode_;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
  Eigen::VectorXd zero_x_;
  FitOptions options_;
};

/// W_{mu,Sigma}(y) = (y-mu)^T Sigma^{-2} (y-mu)/4 - tr(Sigma^{-1})/2, the
/// transformed potential of the Gaussian N(mu, Sigma).
double gaussian_transformed_potential(const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma_inv,
                                      const Eigen::VectorXd& y);

}  // namespace homog::gibbs
