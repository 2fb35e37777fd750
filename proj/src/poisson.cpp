#include "homog/poisson.hpp"

#include "homog/errors.hpp"

#include <cmath>
#include <exception>
#include <sstream>

namespace homog::poisson {

namespace {
constexpr Eigen::Index kBlock = 32;

Eigen::VectorXd node_values(const quadrature::QuadratureRule& rule,
                            const std::function<double(const Eigen::VectorXd&)>& g) {
  const auto count = static_cast<Eigen::Index>(rule.size());
  Eigen::VectorXd out(count);
  std::exception_ptr failure;
#pragma omp parallel for schedule(static)
  for (Eigen::Index q = 0; q < count; ++q) {
    try {
      out(q) = g(rule.nodes.col(q));
    } catch (...) {
#pragma omp critical(homog_node_values)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

void require_finite(const Eigen::MatrixXd& m, const char* what) {
  if (!m.allFinite()) throw NumericError(std::string(what) + " has non-finite entries");
}
}  // namespace

Eigen::MatrixXd nodal_polynomials(const hermite::HermiteBasis& basis, const quadrature::QuadratureRule& rule) {
  const int n = basis.dim();
  const int d = basis.degree();
  const auto stride = static_cast<std::size_t>(d) + 1;
  const auto per_dim = static_cast<std::size_t>(rule.per_dim);
  std::vector<double> table(per_dim * stride);
  for (std::size_t i = 0; i < per_dim; ++i) hermite::hermite_1d_table(d, rule.base.nodes[i], table.data() + i * stride);

  const auto count = static_cast<Eigen::Index>(rule.size());
  const auto N = static_cast<Eigen::Index>(basis.size());
  Eigen::MatrixXd B(count, N);
#pragma omp parallel
  {
    std::vector<double> local(static_cast<std::size_t>(n) * stride);
    std::vector<double> row(static_cast<std::size_t>(N));
#pragma omp for schedule(static)
    for (Eigen::Index q = 0; q < count; ++q) {
      for (int j = 0; j < n; ++j) {
        const auto i = static_cast<std::size_t>(rule.axis_index(static_cast<std::size_t>(q), j));
        std::copy_n(table.data() + i * stride, stride, local.data() + static_cast<std::size_t>(j) * stride);
      }
      basis.products_from_tables(local, row.data());
      for (Eigen::Index a = 0; a < N; ++a) B(q, a) = row[static_cast<std::size_t>(a)];
    }
  }
  return B;
}

namespace {
Eigen::VectorXd weighted_potential_gap(const gibbs::GibbsMeasure& g, const hermite::HermiteBasis& basis,
                                       const quadrature::QuadratureRule& rule) {
  const auto& fac = basis.factor();
  const Eigen::MatrixXd sigma_inv = fac.Q * fac.D.cwiseInverse().asDiagonal() * fac.Q.transpose();
  Eigen::VectorXd dw = node_values(rule, [&](const Eigen::VectorXd& y) {
    return g.transformed_potential(y) - gibbs::gaussian_transformed_potential(basis.mu(), sigma_inv, y);
  });
  dw.array() *= rule.weights.array();
  require_finite(dw, "transformed potential at quadrature nodes");
  return dw;
}
}  // namespace

Eigen::MatrixXd assemble_stiffness(const gibbs::GibbsMeasure& g, const hermite::HermiteBasis& basis,
                                   const quadrature::QuadratureRule& rule, const Eigen::MatrixXd& B) {
  const Eigen::VectorXd dw = weighted_potential_gap(g, basis, rule);
  const Eigen::Index N = B.cols();
  const Eigen::Index blocks = (N + kBlock - 1) / kBlock;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(N, N);

  // Upper block-triangle: column block c receives rows [0, end of block c).
#pragma omp parallel for schedule(dynamic, 1)
  for (Eigen::Index blk = 0; blk < blocks; ++blk) {
    const Eigen::Index c0 = blk * kBlock;
    const Eigen::Index width = std::min(kBlock, N - c0);
    const Eigen::Index rows = c0 + width;
    const Eigen::MatrixXd WB = dw.asDiagonal() * B.middleCols(c0, width);
    A.block(0, c0, rows, width).noalias() = B.leftCols(rows).transpose() * WB;
  }
  for (Eigen::Index j = 0; j < N; ++j)
    for (Eigen::Index i = (j / kBlock + 1) * kBlock; i < N; ++i) A(i, j) = A(j, i);
  A = 0.5 * (A + A.transpose()).eval();
  A.diagonal() += basis.eigenvalues();
  require_finite(A, "stiffness matrix");
  return A;
}

Eigen::MatrixXd assemble_stiffness_reference(const gibbs::GibbsMeasure& g, const hermite::HermiteBasis& basis,
                                             const quadrature::QuadratureRule& rule) {
  const int n = basis.dim();
  const int d = basis.degree();
  const Eigen::VectorXd dw = weighted_potential_gap(g, basis, rule);

  // Moments over all |gamma| <= 2d.
  const hermite::HermiteBasis wide(basis.mu(), basis.sigma(), 2 * d);
  const std::size_t M = wide.size();
  std::vector<double> moments(M, 0.0);
  for (std::size_t q = 0; q < rule.size(); ++q) {
    const Eigen::VectorXd y = rule.nodes.col(static_cast<Eigen::Index>(q));
    for (std::size_t k = 0; k < M; ++k) moments[k] += dw(static_cast<Eigen::Index>(q)) * hermite::monomial(wide.index(k), y);
  }

  const std::size_t N = basis.size();
  Eigen::MatrixXd I(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
  for (std::size_t r = 0; r < N; ++r) {
    for (std::size_t s = 0; s < N; ++s) {
      hermite::MultiIndex sum = basis.index(r);
      for (int j = 0; j < n; ++j) sum[static_cast<std::size_t>(j)] += basis.index(s)[static_cast<std::size_t>(j)];
      I(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(s)) = moments[wide.position(sum)];
    }
  }

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
  for (std::size_t a = 0; a < N; ++a) {
    for (std::size_t b = 0; b < N; ++b) {
      double s = 0.0;
      for (const auto& [r, cr] : basis.monomial_coefficients(a))
        for (const auto& [t, ct] : basis.monomial_coefficients(b))
          s += cr * ct * I(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(t));
      A(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = s;
    }
  }
  A.diagonal() += basis.eigenvalues();
  require_finite(A, "stiffness matrix");
  return A;
}

CellSolver::CellSolver(const gibbs::GibbsMeasure& g, int d, const AssemblyOptions& options)
    : gibbs_(g),
      basis_(g.basis(d)),
      tolerance_(options.solve_tolerance) {
  const int nodes = options.nodes_per_dim > 0 ? options.nodes_per_dim : quadrature::default_assembly_nodes(d);
  rule_ = quadrature::tensorize(quadrature::gauss_hermite_1d(nodes), basis_.mu(), basis_.sigma(), basis_.factor(),
                                options.node_cap);
  B_ = nodal_polynomials(basis_, rule_);
  A_ = assemble_stiffness(gibbs_, basis_, rule_, B_);

  const Eigen::VectorXd log_r = node_values(rule_, [&](const Eigen::VectorXd& y) {
    return 0.5 * (gibbs_.log_density(y) - basis_.log_gaussian_density(y));
  });
  ratio_weights_ = rule_.weights.array() * log_r.array().exp();
  density_weights_ = rule_.weights.array() * (2.0 * log_r.array()).exp();
  require_finite(ratio_weights_, "density ratio at quadrature nodes");
  require_finite(density_weights_, "density ratio at quadrature nodes");

  k_ = B_.transpose() * ratio_weights_;
  const double knorm = k_.norm();
  if (!(knorm > 0.0)) throw NumericError("kernel vector vanishes");
  k_hat_ = k_ / knorm;

  sigma_ = 1.0 + A_.diagonal().maxCoeff();
  deflated_ = A_ + sigma_ * k_hat_ * k_hat_.transpose();
  ldlt_.compute(deflated_);
  if (ldlt_.info() != Eigen::Success) throw SolverError("factorization of the deflated stiffness failed");
  const Eigen::VectorXd piv = ldlt_.vectorD().cwiseAbs();
  if (piv.minCoeff() <= 1e-14 * piv.maxCoeff())
    throw SolverError("deflated stiffness is numerically singular (degree too small or potential not confining?)");
}

Eigen::VectorXd CellSolver::rhs(const expr::Expression& f, const Eigen::VectorXd& x) const {
  Eigen::VectorXd v = node_values(rule_, [&](const Eigen::VectorXd& y) { return f(x, y); });
  v.array() *= ratio_weights_.array();
  Eigen::VectorXd b = B_.transpose() * v;
  require_finite(b, "right-hand side");
  return b;
}

Eigen::MatrixXd CellSolver::rhs(const std::vector<expr::Expression>& f, const Eigen::VectorXd& x) const {
  Eigen::MatrixXd b(static_cast<Eigen::Index>(basis_.size()), static_cast<Eigen::Index>(f.size()));
  for (std::size_t i = 0; i < f.size(); ++i) b.col(static_cast<Eigen::Index>(i)) = rhs(f[i], x);
  return b;
}

Eigen::MatrixXd CellSolver::solve(const Eigen::MatrixXd& b, bool project) const {
  Eigen::MatrixXd psi = ldlt_.solve(b);
  for (Eigen::Index c = 0; c < b.cols(); ++c) {
    const double bnorm = b.col(c).cwiseAbs().maxCoeff();
    if (bnorm == 0.0) {
      psi.col(c).setZero();
      continue;
    }
    double rel = 0.0;
    for (int it = 0; it < 10; ++it) {
      const Eigen::VectorXd r = b.col(c) - deflated_ * psi.col(c);
      rel = r.cwiseAbs().maxCoeff() / bnorm;
      if (rel <= tolerance_) break;
      psi.col(c) += ldlt_.solve(r);
    }
    if (!(rel <= tolerance_)) {
      std::ostringstream msg;
      msg << "cell problem residual " << rel << " exceeds tolerance " << tolerance_;
      throw SolverError(msg.str());
    }
  }
  if (project) psi -= k_hat_ * (k_hat_.transpose() * psi);
  return psi;
}

PoissonSolution CellSolver::solve_at(const std::vector<expr::Expression>& f,
                                     const std::vector<std::vector<expr::Expression>>& df,
                                     const Eigen::VectorXd& x) const {
  const auto N = static_cast<Eigen::Index>(basis_.size());
  const auto m = static_cast<Eigen::Index>(f.size());
  const auto slow = static_cast<Eigen::Index>(df.size());
  Eigen::MatrixXd all(N, m * (1 + slow));
  all.leftCols(m) = rhs(f, x);
  for (Eigen::Index j = 0; j < slow; ++j) all.middleCols(m * (1 + j), m) = rhs(df[static_cast<std::size_t>(j)], x);
  const Eigen::MatrixXd sol = solve(all);

  PoissonSolution out;
  out.x = x;
  out.rhs = all.leftCols(m);
  out.psi = sol.leftCols(m);
  for (Eigen::Index j = 0; j < slow; ++j) {
    out.grad_rhs.push_back(all.middleCols(m * (1 + j), m));
    out.grad_psi.push_back(sol.middleCols(m * (1 + j), m));
  }
  return out;
}

double CellSolver::gibbs_average(const std::function<double(const Eigen::VectorXd&)>& g) const {
  return density_weights_.dot(node_values(rule_, g));
}

double CellSolver::evaluate(const Eigen::VectorXd& psi, const Eigen::VectorXd& y) const {
  return basis_.eval_functions(y).dot(psi);
}

double CellSolver::deflated_residual(const Eigen::VectorXd& psi, const Eigen::VectorXd& b) const {
  const double bnorm = b.cwiseAbs().maxCoeff();
  const Eigen::VectorXd r = deflated_ * psi - b;
  return bnorm == 0.0 ? r.cwiseAbs().maxCoeff() : r.cwiseAbs().maxCoeff() / bnorm;
}

std::vector<std::vector<expr::Expression>> slow_gradients(const std::vector<expr::Expression>& f, int m) {
  std::vector<std::vector<expr::Expression>> out(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j)
    for (const auto& fi : f) out[static_cast<std::size_t>(j)].push_back(expr::differentiate(fi, expr::Var::slow(j)));
  return out;
}

}  // namespace homog::poisson
