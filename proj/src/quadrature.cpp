#include "homog/quadrature.hpp"

#include "homog/errors.hpp"
#include "homog/hermite.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

namespace homog::quadrature {

Rule1D gauss_hermite_1d(int N) {
  if (N < 1) throw UsageError("gauss_hermite_1d: need N >= 1");
  Rule1D r;
  r.nodes.resize(static_cast<std::size_t>(N));
  r.weights.resize(static_cast<std::size_t>(N));
  if (N == 1) {
    r.nodes[0] = 0.0;
    r.weights[0] = 1.0;
    return r;
  }

  // Golub-Welsch initial guesses from the Jacobi matrix of the recurrence.
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(N);
  Eigen::VectorXd sub(N - 1);
  for (int k = 1; k < N; ++k) sub(k - 1) = std::sqrt(static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd guess = solver.eigenvalues();

  std::vector<double> table(static_cast<std::size_t>(N) + 1);
  const double sqrtN = std::sqrt(static_cast<double>(N));
  for (int i = 0; i < N; ++i) {
    double x = guess(i);
    for (int it = 0; it < 100; ++it) {
      hermite::hermite_1d_table(N, x, table.data());
      // H_N' = sqrt(N) H_{N-1}
      const double step = table[static_cast<std::size_t>(N)] / (sqrtN * table[static_cast<std::size_t>(N) - 1]);
      x -= step;
      if (std::abs(step) <= 1e-14 * std::max(1.0, std::abs(x))) break;
    }
    r.nodes[static_cast<std::size_t>(i)] = x;
  }

  for (int i = 0; i < N / 2; ++i) {
    const auto lo = static_cast<std::size_t>(i);
    const auto hi = static_cast<std::size_t>(N - 1 - i);
    const double a = 0.5 * (r.nodes[hi] - r.nodes[lo]);
    r.nodes[lo] = -a;
    r.nodes[hi] = a;
  }
  if (N % 2 == 1) r.nodes[static_cast<std::size_t>(N / 2)] = 0.0;

  double total = 0.0;
  for (int i = 0; i < N; ++i) {
    hermite::hermite_1d_table(N - 1, r.nodes[static_cast<std::size_t>(i)], table.data());
    double s = 0.0;
    for (int k = 0; k < N; ++k) s += table[static_cast<std::size_t>(k)] * table[static_cast<std::size_t>(k)];
    r.weights[static_cast<std::size_t>(i)] = 1.0 / s;
  }
  for (int i = 0; i < N / 2; ++i) {
    const auto lo = static_cast<std::size_t>(i);
    const auto hi = static_cast<std::size_t>(N - 1 - i);
    const double w = 0.5 * (r.weights[lo] + r.weights[hi]);
    r.weights[lo] = w;
    r.weights[hi] = w;
  }
  for (double w : r.weights) total += w;
  for (double& w : r.weights) w /= total;
  return r;
}

int QuadratureRule::axis_index(std::size_t q, int j) const {
  std::size_t stride = 1;
  for (int k = n - 1; k > j; --k) stride *= static_cast<std::size_t>(per_dim);
  return static_cast<int>((q / stride) % static_cast<std::size_t>(per_dim));
}

QuadratureRule tensorize(const Rule1D& rule, int n, const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma,
                         std::size_t node_cap) {
  if (mu.size() != n || sigma.rows() != n) throw UsageError("tensorize: dimension mismatch");
  return tensorize(rule, mu, sigma, linalg::factor_covariance(sigma), node_cap);
}

QuadratureRule tensorize(const Rule1D& rule, const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma,
                         const linalg::CovarianceFactor& factor, std::size_t node_cap) {
  const int n = static_cast<int>(mu.size());
  const std::size_t N = rule.nodes.size();
  std::size_t count = 1;
  for (int j = 0; j < n; ++j) {
    if (count > node_cap / N) {
      std::ostringstream msg;
      msg << "tensor rule with " << N << "^" << n << " nodes exceeds the cap of " << node_cap;
      throw ResourceError(msg.str());
    }
    count *= N;
  }

  QuadratureRule q;
  q.n = n;
  q.per_dim = static_cast<int>(N);
  q.mu = mu;
  q.sigma = sigma;
  q.S = factor.S;
  q.base = rule;
  q.ref_nodes.resize(n, static_cast<Eigen::Index>(count));
  q.weights.resize(static_cast<Eigen::Index>(count));
  std::vector<std::size_t> digit(static_cast<std::size_t>(n), 0);
  for (std::size_t i = 0; i < count; ++i) {
    double w = 1.0;
    for (int j = 0; j < n; ++j) {
      const std::size_t dj = digit[static_cast<std::size_t>(j)];
      q.ref_nodes(j, static_cast<Eigen::Index>(i)) = rule.nodes[dj];
      w *= rule.weights[dj];
    }
    q.weights(static_cast<Eigen::Index>(i)) = w;
    for (int j = n - 1; j >= 0; --j) {
      if (++digit[static_cast<std::size_t>(j)] < N) break;
      digit[static_cast<std::size_t>(j)] = 0;
    }
  }
  q.nodes = (factor.S * q.ref_nodes).colwise() + mu;
  return q;
}

double integrate(const std::function<double(const Eigen::VectorXd&)>& g, const QuadratureRule& rule) {
  double sum = 0.0;
  Eigen::VectorXd y(rule.n);
  for (Eigen::Index i = 0; i < rule.weights.size(); ++i) {
    y = rule.nodes.col(i);
    const double v = g(y);
    if (!std::isfinite(v)) {
      std::ostringstream msg;
      msg << "non-finite integrand at node " << i << " (y = " << y.transpose() << ")";
      throw NumericError(msg.str());
    }
    sum += rule.weights(i) * v;
  }
  return sum;
}

}  // namespace homog::quadrature
