#include "homog/hmm.hpp"

#include "homog/errors.hpp"
#include "homog/gibbs.hpp"
#include "homog/linalg.hpp"
#include "homog/poisson.hpp"
#include "homog/rng.hpp"

#include <cmath>
#include <exception>

namespace homog::hmm {

double HmmConfig::dtau() const { return std::ldexp(1.0, -p); }

long HmmConfig::samples() const { return 10L << (3 * p); }

int HmmConfig::lags() const { return (1 << p) * p; }

void HmmConfig::validate() const {
  if (p < 1 || p > 8) throw UsageError("HMM precision parameter p must be in [1, 8]");
  if (lags() >= samples()) throw UsageError("HMM lag window must be shorter than the burst");
}

GradientMicro::GradientMicro(FastSlowProblem problem) : problem_(std::move(problem)) {
  problem_.validate();
  grad_V_ = expr::gradient_fast(problem_.V);
  df_ = poisson::slow_gradients(problem_.f, problem_.m);
  start_ = gibbs::GibbsMeasure::build(problem_.V, 1.0).mean();
}

Eigen::MatrixXd GradientMicro::burst(const Eigen::VectorXd& x, const HmmConfig& cfg, std::uint32_t burst) const {
  cfg.validate();
  const int n = problem_.n;
  const long N = cfg.samples();
  const long total = cfg.discard() + N;
  const double h = cfg.dtau();
  const double noise = std::sqrt(2.0 * h);
  Eigen::MatrixXd out(N, n);
  Eigen::VectorXd y = start_;
  Eigen::VectorXd g(n);
  for (long s = 0; s < total; ++s) {
    for (int j = 0; j < n; ++j) g(j) = grad_V_[static_cast<std::size_t>(j)](x, y);
    for (int j = 0; j < n; ++j)
      y(j) += -h * g(j) + noise * rng::normal(cfg.seed, {rng::Stream::micro, burst, static_cast<std::uint64_t>(s),
                                                         static_cast<std::uint32_t>(j)});
    if (!y.allFinite()) throw BlowUpError(static_cast<std::size_t>(s), "micro solver state is not finite");
    if (s >= cfg.discard()) out.row(s - cfg.discard()) = y.transpose();
  }
  return out;
}

Observables GradientMicro::observe(const Eigen::VectorXd& x, const Eigen::MatrixXd& samples) const {
  const int m = problem_.m;
  const Eigen::Index N = samples.rows();
  Observables obs;
  obs.left.resize(N, m * m);
  obs.right.resize(N, m * m);
  obs.f.resize(N, m);
  obs.rate = Eigen::VectorXd::Zero(m * m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) obs.target.push_back(i);
  Eigen::MatrixXd aa = Eigen::MatrixXd::Zero(N, m * m);

  std::exception_ptr failure;
#pragma omp parallel for schedule(static)
  for (Eigen::Index s = 0; s < N; ++s) {
    try {
      const Eigen::VectorXd y = samples.row(s).transpose();
      for (int i = 0; i < m; ++i) obs.f(s, i) = problem_.f[static_cast<std::size_t>(i)](x, y);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
          obs.left(s, i * m + j) = df_[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)](x, y);
          obs.right(s, i * m + j) = obs.f(s, j);
        }
      for (int i = 0; i < m && problem_.p > 0; ++i)
        for (int j = 0; j < m; ++j) {
          double v = 0.0;
          for (int c = 0; c < problem_.p; ++c)
            v += problem_.alpha[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)](x, y) *
                 problem_.alpha[static_cast<std::size_t>(j)][static_cast<std::size_t>(c)](x, y);
          aa(s, i * m + j) = v;
        }
    } catch (...) {
#pragma omp critical(homog_observe_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  const Eigen::VectorXd mean = aa.colwise().mean().transpose();
  obs.alpha_avg = Eigen::Map<const Eigen::MatrixXd>(mean.data(), m, m).transpose();
  return obs;
}

Eigen::MatrixXd paired_lag_sums(const Eigen::MatrixXd& left, const Eigen::MatrixXd& right, int max_lag) {
  const Eigen::Index N = left.rows();
  const Eigen::Index C = left.cols();
  if (right.rows() != N || right.cols() != C) throw UsageError("lag sums: series shapes differ");
  if (max_lag < 0 || max_lag >= N) throw UsageError("lag sums: lag window exceeds series length");
  const Eigen::Index L = N - max_lag;
  Eigen::MatrixXd S(C, max_lag + 1);
#pragma omp parallel for schedule(static)
  for (int k = 0; k <= max_lag; ++k) {
    S.col(k) = (left.middleRows(k, L).array() * right.topRows(L).array()).colwise().sum().transpose() /
               static_cast<double>(L);
  }
  return S;
}

Eigen::MatrixXd paired_lag_sums_reference(const Eigen::MatrixXd& left, const Eigen::MatrixXd& right, int max_lag) {
  const Eigen::Index N = left.rows();
  const Eigen::Index C = left.cols();
  const Eigen::Index L = N - max_lag;
  Eigen::MatrixXd S(C, max_lag + 1);
  for (Eigen::Index c = 0; c < C; ++c) {
    for (int k = 0; k <= max_lag; ++k) {
      double s = 0.0;
      for (Eigen::Index n = 0; n < L; ++n) s += left(n + k, c) * right(n, c);
      S(c, k) = s / static_cast<double>(L);
    }
  }
  return S;
}

Estimate estimate_coefficients(const Observables& obs, const HmmConfig& cfg) {
  const int K = cfg.lags();
  const double h = cfg.dtau();
  const Eigen::Index m = obs.f.cols();
  auto weight = [&](int k) { return (k == 0 || k == K) ? 0.5 * h : h; };

  Estimate est;
  est.F = Eigen::VectorXd::Zero(m);
  if (obs.left.cols() > 0) {
    const Eigen::MatrixXd S = paired_lag_sums(obs.left, obs.right, K);
    for (Eigen::Index c = 0; c < S.rows(); ++c) {
      double acc = 0.0;
      const double step = std::exp(-obs.rate(c) * h);
      double decay = 1.0;
      for (int k = 0; k <= K; ++k) {
        acc += weight(k) * decay * S(c, k);
        decay *= step;
      }
      est.F(obs.target[static_cast<std::size_t>(c)]) += acc;
    }
  }

  Eigen::MatrixXd left(obs.f.rows(), m * m), right(obs.f.rows(), m * m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) {
      left.col(i * m + j) = obs.f.col(i);
      right.col(i * m + j) = obs.f.col(j);
    }
  const Eigen::MatrixXd S = paired_lag_sums(left, right, K);
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      for (int k = 0; k <= K; ++k) G(i, j) += weight(k) * S(i * m + j, k);
  est.D = obs.alpha_avg + G + G.transpose();
  est.D = 0.5 * (est.D + est.D.transpose()).eval();
  est.A = linalg::semidefinite_cholesky(est.D);
  return est;
}

Estimate estimate_at(const MicroProblem& micro, const Eigen::VectorXd& x, const HmmConfig& cfg,
                     std::uint32_t burst) {
  const Eigen::MatrixXd samples = micro.burst(x, cfg, burst);
  Estimate est = estimate_coefficients(micro.observe(x, samples), cfg);
  est.micro_steps = static_cast<std::size_t>(cfg.discard()) + static_cast<std::size_t>(samples.rows());
  return est;
}

double error_Ep(const std::vector<Eigen::VectorXd>& F_hmm, const std::vector<Eigen::MatrixXd>& A_hmm,
                const std::vector<Eigen::VectorXd>& F_sp, const std::vector<Eigen::MatrixXd>& A_sp, double dt,
                double T) {
  const std::size_t n = F_hmm.size();
  if (A_hmm.size() != n || F_sp.size() != n || A_sp.size() != n)
    throw UsageError("error_Ep: coefficient sequences have different lengths");
  double sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) sum += (F_hmm[k] - F_sp[k]).norm() + (A_hmm[k] - A_sp[k]).norm();
  return dt / T * sum;
}

double log2_slope(const std::vector<int>& p, const std::vector<double>& E) {
  if (p.size() != E.size() || p.size() < 2) throw UsageError("slope fit needs at least two points");
  const double n = static_cast<double>(p.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double x = p[i];
    const double y = std::log2(E[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace homog::hmm
