#pragma once

#include "homog/expr.hpp"

#include <string>
#include <vector>

namespace homog {

/// dX = (1/eps) f(X, Y) dt + alpha(X, Y) dW,
/// dY = -(1/eps^2) grad V(Y) dt + (sqrt(2)/eps) dB.
struct FastSlowProblem {
  std::string name;
  int m = 0;  // slow dimension
  int n = 0;  // fast dimension
  int p = 0;  // columns of alpha
  expr::Expression V;
  std::vector<expr::Expression> f;                  // m entries
  std::vector<std::vector<expr::Expression>> alpha;  // m x p
  double eps = 0.1;
  double lambda = 1.0;
  int d_ref = 40;
  std::vector<double> x0;  // initial slow state

  /// Throws UsageError on inconsistent dimensions.
  void validate() const;
};

}  // namespace homog
