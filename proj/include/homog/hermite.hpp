#pragma once

// Normalized probabilists' Hermite polynomials H_r (orthonormal against the
// standard normal density) and their tensorized, affinely mapped versions
// H_alpha(y; mu, Sigma) = prod_k H_{alpha_k}(z_k), z = S^{-1}(y - mu).

#include "homog/linalg.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

namespace homog::hermite {

using MultiIndex = std::vector<int>;

int degree(const MultiIndex& a);

/// H_r(s) by the three-term recurrence.
double hermite_1d(int r, double s);

/// out[r] = H_r(s) for r = 0..rmax; out must hold rmax + 1 values.
void hermite_1d_table(int rmax, double s, double* out);

/// Coefficients of H_r in powers of s: H_r(s) = sum_t coef[r][t] s^t.
std::vector<std::vector<double>> hermite_1d_coefficients(int rmax);

/// All multi-indices of length n with |alpha| <= d, by degree and then
/// lexicographically descending within a degree, so (1,0) precedes (0,1).
std::vector<MultiIndex> graded_lex(int n, int d);

/// Sparse polynomial in y: (multi-index position in the basis, coefficient).
using SparsePolynomial = std::vector<std::pair<std::size_t, double>>;

class HermiteBasis {
 public:
  HermiteBasis(Eigen::VectorXd mu, Eigen::MatrixXd sigma, int d);

  int dim() const noexcept { return n_; }
  int degree() const noexcept { return d_; }
  std::size_t size() const noexcept { return indices_.size(); }

  const std::vector<MultiIndex>& indices() const noexcept { return indices_; }
  const MultiIndex& index(std::size_t k) const { return indices_[k]; }
  /// Position of alpha in indices(); throws UsageError if absent.
  std::size_t position(const MultiIndex& alpha) const;
  bool contains(const MultiIndex& alpha) const;

  const Eigen::VectorXd& mu() const noexcept { return mu_; }
  const Eigen::MatrixXd& sigma() const noexcept { return sigma_; }
  const linalg::CovarianceFactor& factor() const noexcept { return factor_; }
  /// Diagonal of D^{-1}.
  Eigen::VectorXd rates() const { return factor_.D.cwiseInverse(); }

  Eigen::VectorXd to_reference(const Eigen::VectorXd& y) const;

  double eval_polynomial(std::size_t k, const Eigen::VectorXd& y) const;
  double eval_function(std::size_t k, const Eigen::VectorXd& y) const;
  /// All H_alpha(y) in basis order.
  Eigen::VectorXd eval_polynomials(const Eigen::VectorXd& y) const;
  Eigen::VectorXd eval_functions(const Eigen::VectorXd& y) const;

  /// Basis polynomials from per-dimension tables tables[k*(d+1) + r] = H_r(z_k).
  void products_from_tables(std::span<const double> tables, double* out) const;

  double eigenvalue(std::size_t k) const;
  Eigen::VectorXd eigenvalues() const;

  double log_gaussian_density(const Eigen::VectorXd& y) const;
  double gaussian_density(const Eigen::VectorXd& y) const;

  /// Expansion of H_alpha in monomials y^beta, beta indexed by basis position.
  /// Computed on first use and cached.
  const SparsePolynomial& monomial_coefficients(std::size_t k) const;
  /// Dense matrix C with H_alpha(y) = sum_beta C(alpha, beta) y^beta.
  Eigen::MatrixXd monomial_matrix() const;

 private:
  void build_monomials() const;

  int n_;
  int d_;
  Eigen::VectorXd mu_;
  Eigen::MatrixXd sigma_;
  linalg::CovarianceFactor factor_;
  std::vector<MultiIndex> indices_;
  std::unordered_map<std::uint64_t, std::size_t> lookup_;

  struct MonomialCache {
    std::once_flag once;
    std::vector<SparsePolynomial> coefficients;
  };
  std::shared_ptr<MonomialCache> monomials_;
};

/// Key for hashing a multi-index; requires n <= 8 and entries < 256.
std::uint64_t pack(const MultiIndex& a);

/// y^beta.
double monomial(const MultiIndex& beta, const Eigen::VectorXd& y);

}  // namespace homog::hermite
