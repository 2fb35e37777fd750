#pragma once

// Heterogeneous multiscale baseline: micro-solver bursts of the fast process
// at a frozen slow state and Green-Kubo lag-window estimators of the
// effective drift and diffusion.

#include "homog/problem.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <memory>
#include <vector>

namespace homog::hmm {

struct HmmConfig {
  int p = 3;
  std::uint64_t seed = 0;

  /// Micro step in fast time units (delta t / eps^2).
  double dtau() const;
  int discard() const { return 16; }
  int ensemble() const { return 1; }
  /// Samples kept for time averages.
  long samples() const;
  /// Lag window length in micro steps.
  int lags() const;
  void validate() const;
};

/// Time series of observables along one burst; rows are samples.
struct Observables {
  // Drift pairs: F[target[c]] += sum_k w_k dtau exp(-rate[c] k dtau) mean_n left(n+k, c) right(n, c).
  Eigen::MatrixXd left;
  Eigen::MatrixXd right;
  std::vector<int> target;
  Eigen::VectorXd rate;
  Eigen::MatrixXd f;          // N x m, for the diffusion correlations
  Eigen::MatrixXd alpha_avg;  // m x m, time average of alpha alpha^T
};

/// The fast dynamics seen by the micro solver and the observables entering
/// the estimators.
class MicroProblem {
 public:
  virtual ~MicroProblem() = default;
  virtual int slow_dim() const = 0;
  virtual int fast_dim() const = 0;
  /// Post-discard samples (N x n) for a burst identified by `burst`.
  virtual Eigen::MatrixXd burst(const Eigen::VectorXd& x, const HmmConfig& cfg, std::uint32_t burst) const = 0;
  virtual Observables observe(const Eigen::VectorXd& x, const Eigen::MatrixXd& samples) const = 0;
};

/// dY = -grad V dt + sqrt(2) dW by Euler-Maruyama started at the mean of
/// exp(-V); observables from f and alpha.
class GradientMicro : public MicroProblem {
 public:
  explicit GradientMicro(FastSlowProblem problem);
  int slow_dim() const override { return problem_.m; }
  int fast_dim() const override { return problem_.n; }
  Eigen::MatrixXd burst(const Eigen::VectorXd& x, const HmmConfig& cfg, std::uint32_t burst) const override;
  Observables observe(const Eigen::VectorXd& x, const Eigen::MatrixXd& samples) const override;

 private:
  FastSlowProblem problem_;
  std::vector<expr::Expression> grad_V_;
  std::vector<std::vector<expr::Expression>> df_;  // [j][i] = d f_i / d x_j
  Eigen::VectorXd start_;
};

/// S(c, k) = sum_{n < N - K} left(n + k, c) right(n, c) / (N - K), K = max_lag.
/// Parallel over lags; the result is independent of the thread count.
Eigen::MatrixXd paired_lag_sums(const Eigen::MatrixXd& left, const Eigen::MatrixXd& right, int max_lag);
/// Plain serial loops computing the same sums.
Eigen::MatrixXd paired_lag_sums_reference(const Eigen::MatrixXd& left, const Eigen::MatrixXd& right, int max_lag);

struct Estimate {
  Eigen::VectorXd F;
  Eigen::MatrixXd D;
  Eigen::MatrixXd A;
  std::size_t micro_steps = 0;
};

/// Trapezoid lag-window Green-Kubo estimators.
Estimate estimate_coefficients(const Observables& obs, const HmmConfig& cfg);

/// Burst plus estimate at slow state x.
Estimate estimate_at(const MicroProblem& micro, const Eigen::VectorXd& x, const HmmConfig& cfg,
                     std::uint32_t burst);

/// (dt/T) sum_n (|F_hmm - F_sp| + |A_hmm - A_sp|) over a common state sequence.
double error_Ep(const std::vector<Eigen::VectorXd>& F_hmm, const std::vector<Eigen::MatrixXd>& A_hmm,
                const std::vector<Eigen::VectorXd>& F_sp, const std::vector<Eigen::MatrixXd>& A_sp, double dt,
                double T);

/// Least-squares slope of log2(E_p) against p.
double log2_slope(const std::vector<int>& p, const std::vector<double>& E);

}  // namespace homog::hmm
