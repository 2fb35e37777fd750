#include "homog/coeffs.hpp"

#include "homog/errors.hpp"
#include "homog/linalg.hpp"

#include <sstream>

namespace homog::coeffs {

Eigen::VectorXd effective_drift(const poisson::PoissonSolution& sol) {
  const Eigen::Index m = sol.psi.cols();
  Eigen::VectorXd F = Eigen::VectorXd::Zero(m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(sol.grad_psi.size()); ++j)
      F(i) += sol.grad_psi[static_cast<std::size_t>(j)].col(i).dot(sol.rhs.col(j));
  return F;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> effective_diffusion(const poisson::PoissonSolution& sol,
                                                                const Eigen::MatrixXd& alpha_avg) {
  const Eigen::MatrixXd A0 = sol.psi.transpose() * sol.rhs;
  Eigen::MatrixXd D = alpha_avg + A0 + A0.transpose();
  // Exact symmetry; the two triangles differ only by round-off in alpha_avg.
  D = 0.5 * (D + D.transpose()).eval();
  return {D, A0};
}

Eigen::MatrixXd cholesky_factor(const Eigen::MatrixXd& D) { return linalg::semidefinite_cholesky(D); }

Eigen::MatrixXd alpha_average(const poisson::CellSolver& solver,
                              const std::vector<std::vector<expr::Expression>>& alpha, const Eigen::VectorXd& x) {
  const Eigen::Index m = x.size();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m, m);
  if (alpha.empty()) return out;
  const std::size_t p = alpha[0].size();
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const auto& ai = alpha[static_cast<std::size_t>(i)];
      const auto& aj = alpha[static_cast<std::size_t>(j)];
      bool all_zero = true;
      for (std::size_t k = 0; k < p; ++k)
        if (!(ai[k].is_constant() && ai[k].constant_value() == 0.0) &&
            !(aj[k].is_constant() && aj[k].constant_value() == 0.0))
          all_zero = false;
      if (all_zero) continue;
      const double v = solver.gibbs_average([&](const Eigen::VectorXd& y) {
        double s = 0.0;
        for (std::size_t k = 0; k < p; ++k) s += ai[k](x, y) * aj[k](x, y);
        return s;
      });
      out(i, j) = v;
      out(j, i) = v;
    }
  }
  return out;
}

SpectralModel::SpectralModel(const FastSlowProblem& problem, int d, const gibbs::FitOptions& fit,
                             const poisson::AssemblyOptions& assembly)
    : problem_(problem) {
  problem_.validate();
  const gibbs::GibbsMeasure g = gibbs::GibbsMeasure::build(problem_.V, problem_.lambda, fit);
  solver_ = std::make_shared<poisson::CellSolver>(g, d, assembly);
  init();
}

SpectralModel::SpectralModel(const FastSlowProblem& problem, std::shared_ptr<const poisson::CellSolver> solver)
    : problem_(problem), solver_(std::move(solver)) {
  problem_.validate();
  init();
}

void SpectralModel::init() {
  df_ = poisson::slow_gradients(problem_.f, problem_.m);
  for (const auto& row : problem_.alpha)
    for (const auto& a : row)
      for (int j = 0; j < problem_.m; ++j) {
        const expr::Expression da = expr::differentiate(a, expr::Var::slow(j));
        if (!(da.is_constant() && da.constant_value() == 0.0)) alpha_depends_on_x_ = true;
      }
  if (!alpha_depends_on_x_) alpha_cache_ = alpha_average(*solver_, problem_.alpha, Eigen::VectorXd::Zero(problem_.m));
}

poisson::PoissonSolution SpectralModel::solution_at(const Eigen::VectorXd& x) const {
  return solver_->solve_at(problem_.f, df_, x);
}

EffectiveCoefficients SpectralModel::at(const Eigen::VectorXd& x) const {
  if (x.size() != problem_.m) throw UsageError("slow state has wrong dimension");
  const poisson::PoissonSolution sol = solution_at(x);
  EffectiveCoefficients c;
  c.x = x;
  c.F = effective_drift(sol);
  const Eigen::MatrixXd avg = alpha_cache_ ? *alpha_cache_ : alpha_average(*solver_, problem_.alpha, x);
  std::tie(c.D, c.A0) = effective_diffusion(sol, avg);
  try {
    c.A = cholesky_factor(c.D);
  } catch (const NotPositiveSemidefiniteError& e) {
    std::ostringstream msg;
    msg << e.what() << " at x = (" << x.transpose() << "), degree " << solver_->degree();
    throw NotPositiveSemidefiniteError(msg.str());
  }
  return c;
}

}  // namespace homog::coeffs
