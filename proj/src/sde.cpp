#include "homog/sde.hpp"

#include "homog/errors.hpp"
#include "homog/rng.hpp"

#include <cmath>
#include <exception>
#include <sstream>

namespace homog::sde {

void IntegratorConfig::validate() const {
  if (!(dt > 0.0)) throw UsageError("time step must be positive");
  if (!(T >= dt)) throw UsageError("horizon must be at least one time step");
  if (replicas < 1) throw UsageError("need at least one replica");
}

int IntegratorConfig::steps() const { return static_cast<int>(std::ceil(T / dt - 1e-9)); }

Eigen::VectorXd euler_maruyama_step(const Eigen::VectorXd& x, const Eigen::VectorXd& F, const Eigen::MatrixXd& A,
                                    double dt, const Eigen::VectorXd& dW, std::size_t step) {
  Eigen::VectorXd next = x + dt * F + A * dW;
  if (!next.allFinite()) throw BlowUpError(step, "state is not finite");
  return next;
}

Eigen::VectorXd brownian_increment(std::uint64_t seed, int replica, int step, int dim, double dt) {
  Eigen::VectorXd dW(dim);
  const double s = std::sqrt(dt);
  for (int k = 0; k < dim; ++k)
    dW(k) = s * rng::normal(seed, {rng::Stream::macro, static_cast<std::uint32_t>(replica),
                                   static_cast<std::uint64_t>(step), static_cast<std::uint32_t>(k)});
  return dW;
}

TrajectoryEnsemble simulate_homogenized(const coeffs::EffectiveModel& model, const Eigen::VectorXd& x0,
                                        const IntegratorConfig& cfg) {
  cfg.validate();
  const int m = model.dim();
  if (x0.size() != m) throw UsageError("initial state has wrong dimension");
  TrajectoryEnsemble ens;
  ens.m = m;
  ens.replicas = cfg.replicas;
  ens.steps = cfg.steps();
  ens.dt = cfg.dt;
  ens.states.assign(static_cast<std::size_t>(cfg.replicas) * (ens.steps + 1) * m, 0.0);

  std::exception_ptr failure;
  int failed_replica = cfg.replicas;
#pragma omp parallel for schedule(dynamic, 1)
  for (int r = 0; r < cfg.replicas; ++r) {
    Eigen::VectorXd x = x0;
    int n = 0;
    try {
      double* out = ens.states.data() + static_cast<std::size_t>(r) * (ens.steps + 1) * m;
      Eigen::Map<Eigen::VectorXd>(out, m) = x;
      for (n = 0; n < ens.steps; ++n) {
        const coeffs::EffectiveCoefficients c = model.at(x);
        x = euler_maruyama_step(x, c.F, c.A, cfg.dt, brownian_increment(cfg.seed, r, n, m, cfg.dt),
                                static_cast<std::size_t>(n));
        Eigen::Map<Eigen::VectorXd>(out + static_cast<std::size_t>(n + 1) * m, m) = x;
      }
    } catch (const std::exception& e) {
      std::ostringstream msg;
      msg << "replica " << r << ", step " << n << ", x = (" << x.transpose() << "): " << e.what();
      std::exception_ptr wrapped;
      if (dynamic_cast<const NotPositiveSemidefiniteError*>(&e))
        wrapped = std::make_exception_ptr(NotPositiveSemidefiniteError(msg.str()));
      else if (dynamic_cast<const BlowUpError*>(&e))
        wrapped = std::make_exception_ptr(BlowUpError(static_cast<std::size_t>(n), msg.str()));
      else if (dynamic_cast<const SolverError*>(&e))
        wrapped = std::make_exception_ptr(SolverError(msg.str()));
      else
        wrapped = std::make_exception_ptr(Error(msg.str()));
#pragma omp critical(homog_simulate_failure)
      if (r < failed_replica) {
        failed_replica = r;
        failure = wrapped;
      }
    }
  }
  if (failure) std::rethrow_exception(failure);
  return ens;
}

MultiscaleTrajectory simulate_multiscale(const FastSlowProblem& p, const Eigen::VectorXd& x0,
                                         const Eigen::VectorXd& y0, double eps, double micro_dt, double macro_dt,
                                         double T, std::uint64_t seed, int replica) {
  p.validate();
  if (!(eps > 0.0)) throw UsageError("eps must be positive");
  if (!(micro_dt > 0.0) || micro_dt > eps * eps / 10.0 * (1.0 + 1e-12))
    throw UsageError("micro time step must satisfy 0 < dt <= eps^2/10");
  const int per_macro = static_cast<int>(std::llround(macro_dt / micro_dt));
  if (per_macro < 1 || std::abs(per_macro * micro_dt - macro_dt) > 1e-9 * macro_dt)
    throw UsageError("macro step must be an integer multiple of the micro step");
  const int macro_steps = static_cast<int>(std::ceil(T / macro_dt - 1e-9));

  const auto grad_V = expr::gradient_fast(p.V);
  Eigen::VectorXd x = x0, y = y0;
  MultiscaleTrajectory out;
  out.slow.push_back(x);
  const double sq = std::sqrt(micro_dt);
  const double fast_noise = std::sqrt(2.0) / eps;
  Eigen::VectorXd fx(p.m), gy(p.n);
  std::uint64_t step = 0;
  for (int big = 0; big < macro_steps; ++big) {
    for (int k = 0; k < per_macro; ++k, ++step) {
      for (int i = 0; i < p.m; ++i) fx(i) = p.f[static_cast<std::size_t>(i)](x, y);
      for (int j = 0; j < p.n; ++j) gy(j) = grad_V[static_cast<std::size_t>(j)](x, y);
      Eigen::VectorXd xn = x + (micro_dt / eps) * fx;
      for (int i = 0; i < p.m; ++i)
        for (int c = 0; c < p.p; ++c)
          xn(i) += p.alpha[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)](x, y) * sq *
                   rng::normal(seed, {rng::Stream::macro, static_cast<std::uint32_t>(replica), step,
                                      static_cast<std::uint32_t>(c)});
      Eigen::VectorXd yn = y - (micro_dt / (eps * eps)) * gy;
      for (int j = 0; j < p.n; ++j)
        yn(j) += fast_noise * sq *
                 rng::normal(seed, {rng::Stream::fast, static_cast<std::uint32_t>(replica), step,
                                    static_cast<std::uint32_t>(j)});
      if (!xn.allFinite() || !yn.allFinite()) throw BlowUpError(static_cast<std::size_t>(step), "state is not finite");
      x = std::move(xn);
      y = std::move(yn);
    }
    out.slow.push_back(x);
  }
  out.fast_final = y;
  out.micro_steps = static_cast<std::size_t>(step);
  return out;
}

double error_E(const TrajectoryEnsemble& reference, const TrajectoryEnsemble& approx) {
  if (reference.m != approx.m || reference.replicas != approx.replicas || reference.steps != approx.steps ||
      reference.dt != approx.dt)
    throw UsageError("error_E: ensembles are on different grids");
  double total = 0.0;
  for (int r = 0; r < reference.replicas; ++r) {
    double worst = 0.0;
    for (int n = 0; n <= reference.steps; ++n)
      worst = std::max(worst, (reference.state(r, n) - approx.state(r, n)).squaredNorm());
    total += worst;
  }
  return std::sqrt(total / reference.replicas);
}

double error_pointwise(const Eigen::VectorXd& F, const Eigen::MatrixXd& A, const Eigen::VectorXd& F_d,
                       const Eigen::MatrixXd& A_d) {
  const double nF = F.norm();
  const double nA = A.norm();
  if (nF == 0.0 || nA == 0.0) throw UsageError("pointwise error: reference coefficients vanish at this state");
  return (F - F_d).norm() / nF + (A - A_d).norm() / nA;
}

}  // namespace homog::sde
