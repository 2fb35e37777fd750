#include "homog/gibbs.hpp"

#include "homog/errors.hpp"
#include "homog/linalg.hpp"
#include "homog/quadrature.hpp"

#include <cmath>
#include <numbers>

namespace homog::gibbs {

namespace {

struct Moments {
  double log_Z;
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

Moments importance_moments(const GibbsMeasure& g, const Eigen::VectorXd& center, const Eigen::MatrixXd& proposal,
                           int nodes) {
  const int n = static_cast<int>(center.size());
  const linalg::CovarianceFactor factor = linalg::factor_covariance(proposal);
  const quadrature::QuadratureRule rule =
      quadrature::tensorize(quadrature::gauss_hermite_1d(nodes), center, proposal, factor);
  const double log_norm = 0.5 * n * std::log(2.0 * std::numbers::pi) + 0.5 * factor.log_det;

  const std::size_t count = rule.size();
  Eigen::VectorXd log_w(static_cast<Eigen::Index>(count));
  double max_lw = -std::numeric_limits<double>::infinity();
  for (std::size_t q = 0; q < count; ++q) {
    const auto i = static_cast<Eigen::Index>(q);
    const double V = g.potential(rule.nodes.col(i));
    if (std::isnan(V)) throw NumericError("potential is NaN at a fitting node");
    // w_q exp(-V) / G_proposal
    const double lw = std::log(rule.weights(i)) - V + 0.5 * rule.ref_nodes.col(i).squaredNorm() + log_norm;
    log_w(i) = lw;
    if (lw > max_lw) max_lw = lw;
  }
  if (!std::isfinite(max_lw)) throw NumericError("normalization integral is not finite (is V confining?)");

  Eigen::VectorXd w = (log_w.array() - max_lw).exp();
  const double total = w.sum();
  Moments m;
  m.log_Z = max_lw + std::log(total);
  w /= total;
  m.mean = rule.nodes * w;
  const Eigen::MatrixXd centered = rule.nodes.colwise() - m.mean;
  m.cov = centered * w.asDiagonal() * centered.transpose();
  m.cov = 0.5 * (m.cov + m.cov.transpose());
  if (!std::isfinite(m.log_Z) || !m.mean.allFinite() || !m.cov.allFinite())
    throw NumericError("fitted moments are not finite (is V confining?)");
  return m;
}

Eigen::VectorXd eval_gradient(const std::vector<expr::Expression>& grad, const Eigen::VectorXd& x,
                              const Eigen::VectorXd& y) {
  Eigen::VectorXd g(static_cast<Eigen::Index>(grad.size()));
  for (std::size_t j = 0; j < grad.size(); ++j) g(static_cast<Eigen::Index>(j)) = grad[j](x, y);
  return g;
}

// Distance along +-u at which V first exceeds V(y) + 1, taking the larger side.
double level_distance(const GibbsMeasure& g, const Eigen::VectorXd& y, const Eigen::VectorXd& u) {
  const double target = g.potential(y) + 1.0;
  double best = 0.0;
  for (double side : {1.0, -1.0}) {
    double hi = 0.25;
    while (g.potential(y + side * hi * u) < target) {
      hi *= 2.0;
      if (hi > 1e6) throw NumericError("potential does not grow along a fitted direction (is V confining?)");
    }
    double lo = 0.0;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (g.potential(y + side * mid * u) < target)
        lo = mid;
      else
        hi = mid;
    }
    best = std::max(best, hi);
  }
  return best;
}

}  // namespace

int fit_nodes_for(const FitOptions& options, int n) {
  if (options.fit_nodes > 0) return options.fit_nodes;
  static constexpr int by_dim[] = {400, 200, 64};
  return n <= 3 ? by_dim[n - 1] : 24;
}

GibbsMeasure GibbsMeasure::build(const expr::Expression& V, double lambda, const FitOptions& options) {
  if (!(lambda > 0.0)) throw UsageError("scaling parameter lambda must be positive");
  if (V.fast_dim() < 1) throw UsageError("potential must depend on at least one fast variable");
  GibbsMeasure g;
  g.n_ = V.fast_dim();
  g.V_ = V;
  g.lambda_ = lambda;
  g.options_ = options;
  g.zero_x_ = Eigen::VectorXd::Zero(V.slow_dim());
  g.grad_V_ = expr::gradient_fast(V);
  expr::Expression grad_sq(V.slow_dim(), V.fast_dim());
  for (const auto& gj : g.grad_V_) grad_sq = grad_sq + gj * gj;
  g.W_ = expr::Expression::constant(0.25, V.slow_dim(), V.fast_dim()) * grad_sq -
         expr::Expression::constant(0.5, V.slow_dim(), V.fast_dim()) * expr::laplacian_fast(V);

  const int n = g.n_;
  const Eigen::VectorXd& x0 = g.zero_x_;

  // Mode by gradient descent with Armijo backtracking.
  Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
  double vy = g.potential(y);
  double t = 1.0;
  for (int step = 0; step < options.descent_steps; ++step) {
    const Eigen::VectorXd grad = eval_gradient(g.grad_V_, x0, y);
    const double gg = grad.squaredNorm();
    if (gg < 1e-24) break;
    t = std::min(1.0, 2.0 * t);
    int halvings = 0;
    for (;;) {
      const Eigen::VectorXd trial = y - t * grad;
      const double vt = g.potential(trial);
      if (std::isfinite(vt) && vt <= vy - 1e-4 * t * gg) {
        y = trial;
        vy = vt;
        break;
      }
      t *= 0.5;
      if (++halvings > 80) break;
    }
    if (halvings > 80) break;
  }
  g.mode_ = y;

  // Local scale from the Hessian (central differences of grad V), with the
  // unit-rise distance of V as a fallback where the curvature is not positive.
  const double h = 1e-5 * std::max(1.0, y.norm());
  Eigen::MatrixXd hess(n, n);
  for (int j = 0; j < n; ++j) {
    Eigen::VectorXd yp = y, ym = y;
    yp(j) += h;
    ym(j) -= h;
    hess.col(j) = (eval_gradient(g.grad_V_, x0, yp) - eval_gradient(g.grad_V_, x0, ym)) / (2.0 * h);
  }
  hess = 0.5 * (hess + hess.transpose());
  const linalg::SymmetricEigen eig = linalg::jacobi_eigen(hess);
  Eigen::VectorXd var(n);
  for (int k = 0; k < n; ++k) {
    const double r = level_distance(g, y, eig.vectors.col(k));
    const double level_var = 0.5 * r * r;
    const double hk = eig.values(k);
    var(k) = hk > 0.0 ? std::min(1.0 / hk, level_var) : level_var;
  }
  const Eigen::MatrixXd proposal =
      options.proposal_inflation * eig.vectors * var.asDiagonal() * eig.vectors.transpose();

  Moments m = importance_moments(g, y, 0.5 * (proposal + proposal.transpose()), fit_nodes_for(options, n));
  m = importance_moments(g, m.mean, m.cov, fit_nodes_for(options, n));
  g.log_Z_ = m.log_Z;
  g.mean_ = m.mean;
  g.cov_ = m.cov;
  linalg::factor_covariance(g.cov_);  // throws unless SPD
  return g;
}

double GibbsMeasure::Z() const { return std::exp(log_Z_); }

double GibbsMeasure::potential(const Eigen::VectorXd& y) const { return V_(zero_x_, y); }

double GibbsMeasure::transformed_potential(const Eigen::VectorXd& y) const { return W_(zero_x_, y); }

double GibbsMeasure::density_ratio_sqrt(const hermite::HermiteBasis& basis, const Eigen::VectorXd& y) const {
  return std::exp(0.5 * (log_density(y) - basis.log_gaussian_density(y)));
}

hermite::HermiteBasis GibbsMeasure::basis(int d) const { return hermite::HermiteBasis(mean_, sigma(), d); }

double gaussian_transformed_potential(const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma_inv,
                                      const Eigen::VectorXd& y) {
  const Eigen::VectorXd u = sigma_inv * (y - mu);
  return 0.25 * u.squaredNorm() - 0.5 * sigma_inv.trace();
}

}  // namespace homog::gibbs
