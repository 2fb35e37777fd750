#pragma once

// Galerkin reduction of the periodic SPDE
//   u_t = (1/eps^2)(u_xx + u) + (1/eps) u^2 (u^2)_x + (1/eps) Q dW/dt
// on [-pi, pi] to two slow kernel modes and n fast modes, and the exact
// Hermite-polynomial homogenization of the reduced system.

#include "homog/coeffs.hpp"
#include "homog/hmm.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <map>
#include <vector>

namespace homog::spde {

/// Eigenvalue of d^2/dx^2 + 1 for the 1-based mode index i.
double eigenvalue(int i);
/// Eigenfunction e_i(x) and its derivative.
double eigenfunction(int i, double x);
double eigenfunction_dx(int i, double x);

/// Sparse polynomial with up to 16 variables and exponents below 16 per variable.
class Polynomial {
 public:
  explicit Polynomial(int vars = 0) : vars_(vars) {}

  static std::uint64_t key(const std::vector<int>& exponents);
  static int exponent(std::uint64_t key, int var) { return static_cast<int>((key >> (4 * var)) & 0xF); }

  int vars() const noexcept { return vars_; }
  const std::map<std::uint64_t, double>& terms() const noexcept { return terms_; }
  void add(std::uint64_t key, double coefficient);
  int degree() const;

  double evaluate(const Eigen::VectorXd& v) const;
  Polynomial derivative(int var) const;
  /// Fixes the first values.size() variables; the rest are renumbered from 0.
  Polynomial fix_leading(const Eigen::VectorXd& values) const;

 private:
  int vars_;
  std::map<std::uint64_t, double> terms_;
};

struct SpdeConfig {
  int modes = 8;          // fast modes n
  std::vector<double> q;  // noise amplitudes of the fast modes; empty means all 1
  int grid = 0;           // 0 means max(80, 8 (n + 2))
  double eps = 0.1;
  bool include_b_term = true;
  std::vector<double> x0 = {1.2, 1.2};
};

class SpectralSpde {
 public:
  explicit SpectralSpde(SpdeConfig cfg);

  const SpdeConfig& config() const noexcept { return cfg_; }
  int modes() const noexcept { return cfg_.modes; }
  int grid() const noexcept { return grid_; }
  /// Decay rate |lambda| and noise amplitude of fast mode k (0-based).
  double rate(int k) const { return -eigenvalue(k + 3); }
  double noise(int k) const { return cfg_.q[static_cast<std::size_t>(k)]; }
  /// Stationary variance q^2 / (2 |lambda|) of fast mode k.
  double variance(int k) const;

  /// a^i = <F(u), e_i> for the kernel modes and b^k for the fast modes, with
  /// u = x1 e1 + x2 e2 + sum_k y_k e_{k+3}, evaluated on the collocation grid.
  void project_nonlinearity(const Eigen::VectorXd& x, const Eigen::VectorXd& y, Eigen::VectorXd& a,
                            Eigen::VectorXd& b) const;

  /// Exact polynomials in (x1, x2, y_0, ..., y_{n-1}).
  const Polynomial& a_polynomial(int i) const { return a_[static_cast<std::size_t>(i)]; }
  const Polynomial& b_polynomial(int k) const { return b_[static_cast<std::size_t>(k)]; }

 private:
  SpdeConfig cfg_;
  int grid_;
  std::vector<double> nodes_;
  Eigen::MatrixXd basis_;     // grid x (n + 2): e_i at nodes
  Eigen::MatrixXd basis_dx_;  // derivatives
  std::vector<Polynomial> a_;
  std::vector<Polynomial> b_;
};

/// Effective coefficients of the reduced system through the exact Hermite
/// expansion of a in the stationary Gaussian of the fast modes.
class SpdeModel : public coeffs::EffectiveModel {
 public:
  SpdeModel(const SpectralSpde& spde, int d);

  int dim() const override { return 2; }
  coeffs::EffectiveCoefficients at(const Eigen::VectorXd& x) const override;

  /// Hermite coefficients (basis order) of a polynomial in y.
  Eigen::VectorXd hermite_coefficients(const Polynomial& py) const;
  const hermite::HermiteBasis& basis() const { return basis_; }

 private:
  const SpectralSpde* spde_;
  int d_;
  hermite::HermiteBasis basis_;
  Eigen::VectorXd eig_;
  std::vector<Eigen::VectorXd> scale_;  // scale_[k](t) = s_k^t
  std::vector<std::vector<double>> mono_to_hermite_;  // [t][r]: z^t = sum_r M[t][r] H_r(z)
  std::vector<Polynomial> da_dx_;  // [i * 2 + j] = d a^i / d x_j
};

/// HMM micro problem for the reduced system: exact Ornstein-Uhlenbeck
/// transitions of the fast modes, observables from a and b.
class SpdeMicro : public hmm::MicroProblem {
 public:
  explicit SpdeMicro(const SpectralSpde& spde);
  int slow_dim() const override { return 2; }
  int fast_dim() const override { return spde_->modes(); }
  Eigen::MatrixXd burst(const Eigen::VectorXd& x, const hmm::HmmConfig& cfg, std::uint32_t burst) const override;
  hmm::Observables observe(const Eigen::VectorXd& x, const Eigen::MatrixXd& samples) const override;

 private:
  const SpectralSpde* spde_;
  std::vector<Polynomial> da_dx_;  // [i * 2 + j]
  std::vector<Polynomial> da_dy_;  // [i * n + k], in (x, y) variables
};

struct ReducedTrajectory {
  std::vector<Eigen::VectorXd> slow;
  Eigen::VectorXd fast_final;
};

/// Euler-Maruyama on the reduced fast/slow system with step
/// micro_dt <= eps^2 / (10 max|lambda|).
ReducedTrajectory simulate_reduced(const SpectralSpde& spde, const Eigen::VectorXd& x0, const Eigen::VectorXd& y0,
                                   double micro_dt, double T, std::uint64_t seed, int replica = 0);

}  // namespace homog::spde
