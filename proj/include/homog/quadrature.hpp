#pragma once

// Gauss-Hermite rules for the standard normal weight and their tensor
// products pushed forward by y = mu + S z.

#include "homog/linalg.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <functional>
#include <vector>

namespace homog::quadrature {

struct Rule1D {
  std::vector<double> nodes;    // ascending
  std::vector<double> weights;  // sum to 1
};

/// N-point rule exact for polynomials of degree <= 2N-1 against N(0,1).
Rule1D gauss_hermite_1d(int N);

inline constexpr std::size_t kDefaultNodeCap = 100'000'000;

struct QuadratureRule {
  int n = 0;
  int per_dim = 0;
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma;
  Eigen::MatrixXd S;
  Eigen::MatrixXd nodes;      // n x count, physical coordinates
  Eigen::MatrixXd ref_nodes;  // n x count, z = S^{-1}(y - mu)
  Eigen::VectorXd weights;
  Rule1D base;

  std::size_t size() const { return static_cast<std::size_t>(weights.size()); }
  /// 1D node index of node q along dimension j (last dimension varies fastest).
  int axis_index(std::size_t q, int j) const;
};

QuadratureRule tensorize(const Rule1D& rule, int n, const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma,
                         std::size_t node_cap = kDefaultNodeCap);
QuadratureRule tensorize(const Rule1D& rule, const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma,
                         const linalg::CovarianceFactor& factor, std::size_t node_cap = kDefaultNodeCap);

/// sum_i w_i g(q_i) in node order. A non-finite g value throws NumericError.
double integrate(const std::function<double(const Eigen::VectorXd&)>& g, const QuadratureRule& rule);

/// Default per-dimension node count for assembly integrals at degree d.
inline int default_assembly_nodes(int d) { return 2 * d + 10; }

}  // namespace homog::quadrature
