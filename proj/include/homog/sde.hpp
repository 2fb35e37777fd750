#pragma once

// Euler-Maruyama integration of the homogenized SDE (coupled replicas with
// shared Brownian increments) and of the full fast/slow system, plus the
// trajectory and coefficient error measures.

#include "homog/coeffs.hpp"
#include "homog/problem.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace homog::sde {

struct IntegratorConfig {
  double dt = 0.01;
  double T = 1.0;
  int replicas = 50;
  std::uint64_t seed = 0;

  void validate() const;
  /// ceil(T / dt), tolerant of round-off in T / dt.
  int steps() const;
};

struct TrajectoryEnsemble {
  int m = 0;
  int replicas = 0;
  int steps = 0;
  double dt = 0.0;
  std::vector<double> states;  // [(replica * (steps + 1) + n) * m + i]

  Eigen::Map<const Eigen::VectorXd> state(int replica, int n) const {
    return {states.data() + (static_cast<std::size_t>(replica) * (steps + 1) + n) * m, m};
  }
};

/// x + dt F + A dW. Throws BlowUpError(step) if the result is not finite.
Eigen::VectorXd euler_maruyama_step(const Eigen::VectorXd& x, const Eigen::VectorXd& F, const Eigen::MatrixXd& A,
                                    double dt, const Eigen::VectorXd& dW, std::size_t step = 0);

/// Brownian increment of the homogenized equation for (replica, step).
Eigen::VectorXd brownian_increment(std::uint64_t seed, int replica, int step, int dim, double dt);

/// Replicas run in parallel; output is identical for any thread count.
TrajectoryEnsemble simulate_homogenized(const coeffs::EffectiveModel& model, const Eigen::VectorXd& x0,
                                        const IntegratorConfig& cfg);

struct MultiscaleTrajectory {
  std::vector<Eigen::VectorXd> slow;  // on the macro grid
  Eigen::VectorXd fast_final;
  std::size_t micro_steps = 0;
};

/// Euler-Maruyama on the full system with step micro_dt <= eps^2/10.
MultiscaleTrajectory simulate_multiscale(const FastSlowProblem& p, const Eigen::VectorXd& x0,
                                         const Eigen::VectorXd& y0, double eps, double micro_dt, double macro_dt,
                                         double T, std::uint64_t seed, int replica = 0);

/// sqrt(mean_i max_n |X^{n,i} - X_d^{n,i}|^2).
double error_E(const TrajectoryEnsemble& reference, const TrajectoryEnsemble& approx);

/// |F - F_d| / |F| + |A - A_d| / |A| (Euclidean and Frobenius norms).
double error_pointwise(const Eigen::VectorXd& F, const Eigen::MatrixXd& A, const Eigen::VectorXd& F_d,
                       const Eigen::MatrixXd& A_d);

}  // namespace homog::sde
