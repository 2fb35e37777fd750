#pragma once

#include <Eigen/Core>

namespace homog::linalg {

struct SymmetricEigen {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // columns; largest-magnitude entry of each column is positive
};

/// Cyclic Jacobi eigendecomposition of a small symmetric matrix.
SymmetricEigen jacobi_eigen(const Eigen::MatrixXd& a, double tol = 1e-15, int max_sweeps = 100);

/// Sigma = Q D Q^T with S = Q D^{1/2}. Throws NumericError unless Sigma is
/// symmetric positive definite.
struct CovarianceFactor {
  Eigen::MatrixXd Q;
  Eigen::VectorXd D;
  Eigen::MatrixXd S;
  Eigen::MatrixXd S_inv;
  double log_det = 0.0;
};

CovarianceFactor factor_covariance(const Eigen::MatrixXd& sigma);

/// Lower-triangular L with L L^T = a. Slightly negative pivots (round-off in a
/// rank-deficient matrix) are clamped to zero; a pivot below
/// -reject_tol * max|a| throws NotPositiveSemidefiniteError.
Eigen::MatrixXd semidefinite_cholesky(const Eigen::MatrixXd& a, double reject_tol = 1e-10);

}  // namespace homog::linalg
