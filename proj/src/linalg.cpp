#include "homog/linalg.hpp"

#include "homog/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace homog::linalg {

SymmetricEigen jacobi_eigen(const Eigen::MatrixXd& input, double tol, int max_sweeps) {
  const Eigen::Index n = input.rows();
  if (input.cols() != n) throw UsageError("jacobi_eigen: matrix is not square");
  Eigen::MatrixXd a = 0.5 * (input + input.transpose());
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);

  const double scale = std::max(a.cwiseAbs().maxCoeff(), 1e-300);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (std::sqrt(off) <= tol * scale) break;

    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) { return a(i, i) < a(j, j); });

  SymmetricEigen out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index src = order[static_cast<std::size_t>(k)];
    out.values(k) = a(src, src);
    Eigen::VectorXd col = v.col(src);
    Eigen::Index imax = 0;
    col.cwiseAbs().maxCoeff(&imax);
    if (col(imax) < 0.0) col = -col;
    out.vectors.col(k) = col;
  }
  return out;
}

CovarianceFactor factor_covariance(const Eigen::MatrixXd& sigma) {
  const Eigen::Index n = sigma.rows();
  if (sigma.cols() != n || n == 0) throw UsageError("covariance must be a nonempty square matrix");
  if (!sigma.allFinite()) throw NumericError("covariance has non-finite entries");
  const double asym = (sigma - sigma.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * std::max(1.0, sigma.cwiseAbs().maxCoeff()))
    throw NumericError("covariance is not symmetric");

  SymmetricEigen eig = jacobi_eigen(sigma);
  if (eig.values.minCoeff() <= 0.0) throw NumericError("covariance is not positive definite");

  CovarianceFactor f;
  f.Q = eig.vectors;
  f.D = eig.values;
  f.S = f.Q * f.D.cwiseSqrt().asDiagonal();
  f.S_inv = f.D.cwiseSqrt().cwiseInverse().asDiagonal() * f.Q.transpose();
  f.log_det = f.D.array().log().sum();
  return f;
}

Eigen::MatrixXd semidefinite_cholesky(const Eigen::MatrixXd& a, double reject_tol) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n) throw UsageError("cholesky: matrix is not square");
  const double norm = n == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double pivot = a(j, j);
    for (Eigen::Index k = 0; k < j; ++k) pivot -= l(j, k) * l(j, k);
    if (pivot < -reject_tol * norm)
      throw NotPositiveSemidefiniteError("diffusion matrix is not positive semidefinite (pivot " +
                                         std::to_string(pivot) + " at column " + std::to_string(j) + ")");
    if (pivot <= 0.0) {
      // Rank-deficient column (pivot clamped to zero).
      continue;
    }
    const double ljj = std::sqrt(pivot);
    l(j, j) = ljj;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (Eigen::Index k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return l;
}

}  // namespace homog::linalg
