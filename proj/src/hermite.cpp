#include "homog/hermite.hpp"

#include "homog/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace homog::hermite {

int degree(const MultiIndex& a) { return std::accumulate(a.begin(), a.end(), 0); }

double hermite_1d(int r, double s) {
  if (r < 0) throw UsageError("hermite_1d: negative degree");
  double prev = 0.0;
  double cur = 1.0;
  for (int k = 0; k < r; ++k) {
    const double next = (s * cur - std::sqrt(static_cast<double>(k)) * prev) / std::sqrt(static_cast<double>(k + 1));
    prev = cur;
    cur = next;
  }
  return cur;
}

void hermite_1d_table(int rmax, double s, double* out) {
  out[0] = 1.0;
  if (rmax == 0) return;
  out[1] = s;
  for (int k = 1; k < rmax; ++k)
    out[k + 1] = (s * out[k] - std::sqrt(static_cast<double>(k)) * out[k - 1]) / std::sqrt(static_cast<double>(k + 1));
}

std::vector<std::vector<double>> hermite_1d_coefficients(int rmax) {
  std::vector<std::vector<double>> c(static_cast<std::size_t>(rmax) + 1);
  c[0] = {1.0};
  if (rmax >= 1) c[1] = {0.0, 1.0};
  for (int r = 1; r < rmax; ++r) {
    std::vector<double> next(static_cast<std::size_t>(r) + 2, 0.0);
    const double a = 1.0 / std::sqrt(static_cast<double>(r + 1));
    const double b = std::sqrt(static_cast<double>(r));
    for (std::size_t t = 0; t < c[r].size(); ++t) next[t + 1] += a * c[r][t];
    for (std::size_t t = 0; t < c[r - 1].size(); ++t) next[t] -= a * b * c[r - 1][t];
    c[static_cast<std::size_t>(r) + 1] = std::move(next);
  }
  return c;
}

namespace {
void fixed_degree(int n, int g, int pos, MultiIndex& cur, std::vector<MultiIndex>& out) {
  if (pos == n - 1) {
    cur[static_cast<std::size_t>(pos)] = g;
    out.push_back(cur);
    return;
  }
  for (int v = g; v >= 0; --v) {
    cur[static_cast<std::size_t>(pos)] = v;
    fixed_degree(n, g - v, pos + 1, cur, out);
  }
}
}  // namespace

std::vector<MultiIndex> graded_lex(int n, int d) {
  if (n < 1 || d < 0) throw UsageError("graded_lex: need n >= 1 and d >= 0");
  std::vector<MultiIndex> out;
  MultiIndex cur(static_cast<std::size_t>(n), 0);
  for (int g = 0; g <= d; ++g) fixed_degree(n, g, 0, cur, out);
  return out;
}

std::uint64_t pack(const MultiIndex& a) {
  std::uint64_t key = 0;
  for (std::size_t k = 0; k < a.size(); ++k) key |= static_cast<std::uint64_t>(a[k]) << (8 * k);
  return key;
}

double monomial(const MultiIndex& beta, const Eigen::VectorXd& y) {
  double v = 1.0;
  for (std::size_t k = 0; k < beta.size(); ++k)
    for (int t = 0; t < beta[k]; ++t) v *= y(static_cast<Eigen::Index>(k));
  return v;
}

HermiteBasis::HermiteBasis(Eigen::VectorXd mu, Eigen::MatrixXd sigma, int d)
    : n_(static_cast<int>(mu.size())),
      d_(d),
      mu_(std::move(mu)),
      sigma_(std::move(sigma)),
      factor_(linalg::factor_covariance(sigma_)),
      monomials_(std::make_shared<MonomialCache>()) {
  if (sigma_.rows() != n_) throw UsageError("HermiteBasis: mean and covariance dimensions differ");
  if (n_ > 8 || d_ > 255) throw UsageError("HermiteBasis: supports n <= 8 and d <= 255");
  indices_ = graded_lex(n_, d_);
  lookup_.reserve(indices_.size());
  for (std::size_t k = 0; k < indices_.size(); ++k) lookup_.emplace(pack(indices_[k]), k);
}

std::size_t HermiteBasis::position(const MultiIndex& alpha) const {
  if (static_cast<int>(alpha.size()) != n_) throw UsageError("multi-index has wrong length");
  auto it = lookup_.find(pack(alpha));
  if (it == lookup_.end()) throw UsageError("multi-index not in basis");
  return it->second;
}

bool HermiteBasis::contains(const MultiIndex& alpha) const {
  return static_cast<int>(alpha.size()) == n_ && hermite::degree(alpha) <= d_ &&
         std::all_of(alpha.begin(), alpha.end(), [](int a) { return a >= 0; });
}

Eigen::VectorXd HermiteBasis::to_reference(const Eigen::VectorXd& y) const { return factor_.S_inv * (y - mu_); }

void HermiteBasis::products_from_tables(std::span<const double> tables, double* out) const {
  const std::size_t stride = static_cast<std::size_t>(d_) + 1;
  for (std::size_t k = 0; k < indices_.size(); ++k) {
    const MultiIndex& a = indices_[k];
    double v = 1.0;
    for (std::size_t j = 0; j < a.size(); ++j) v *= tables[j * stride + static_cast<std::size_t>(a[j])];
    out[k] = v;
  }
}

Eigen::VectorXd HermiteBasis::eval_polynomials(const Eigen::VectorXd& y) const {
  const Eigen::VectorXd z = to_reference(y);
  const std::size_t stride = static_cast<std::size_t>(d_) + 1;
  std::vector<double> tables(static_cast<std::size_t>(n_) * stride);
  for (int j = 0; j < n_; ++j) hermite_1d_table(d_, z(j), tables.data() + static_cast<std::size_t>(j) * stride);
  Eigen::VectorXd out(static_cast<Eigen::Index>(size()));
  products_from_tables(tables, out.data());
  return out;
}

Eigen::VectorXd HermiteBasis::eval_functions(const Eigen::VectorXd& y) const {
  return eval_polynomials(y) * std::sqrt(gaussian_density(y));
}

double HermiteBasis::eval_polynomial(std::size_t k, const Eigen::VectorXd& y) const {
  const Eigen::VectorXd z = to_reference(y);
  const MultiIndex& a = indices_.at(k);
  double v = 1.0;
  for (int j = 0; j < n_; ++j) v *= hermite_1d(a[static_cast<std::size_t>(j)], z(j));
  return v;
}

double HermiteBasis::eval_function(std::size_t k, const Eigen::VectorXd& y) const {
  return std::sqrt(gaussian_density(y)) * eval_polynomial(k, y);
}

double HermiteBasis::eigenvalue(std::size_t k) const {
  const MultiIndex& a = indices_.at(k);
  double lam = 0.0;
  for (int j = 0; j < n_; ++j) lam += a[static_cast<std::size_t>(j)] / factor_.D(j);
  return lam;
}

Eigen::VectorXd HermiteBasis::eigenvalues() const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(size()));
  for (std::size_t k = 0; k < size(); ++k) out(static_cast<Eigen::Index>(k)) = eigenvalue(k);
  return out;
}

double HermiteBasis::log_gaussian_density(const Eigen::VectorXd& y) const {
  const Eigen::VectorXd z = to_reference(y);
  return -0.5 * z.squaredNorm() - 0.5 * n_ * std::log(2.0 * std::numbers::pi) - 0.5 * factor_.log_det;
}

double HermiteBasis::gaussian_density(const Eigen::VectorXd& y) const { return std::exp(log_gaussian_density(y)); }

void HermiteBasis::build_monomials() const {
  const std::size_t N = size();
  const std::size_t n = static_cast<std::size_t>(n_);

  // up[k*n + j] = position of indices_[k] + e_j, or N when the degree exceeds d.
  std::vector<std::size_t> up(N * n, N);
  for (std::size_t k = 0; k < N; ++k) {
    for (std::size_t j = 0; j < n; ++j) {
      MultiIndex b = indices_[k];
      ++b[j];
      if (hermite::degree(b) <= d_) up[k * n + j] = lookup_.at(pack(b));
    }
  }

  // per_dim[j][r] = H_r(z_j) as a dense polynomial in y.
  std::vector<std::vector<std::vector<double>>> per_dim(n);
  for (std::size_t j = 0; j < n; ++j) {
    const Eigen::VectorXd row = factor_.S_inv.row(static_cast<Eigen::Index>(j)).transpose();
    const double offset = -row.dot(mu_);
    auto times_z = [&](const std::vector<double>& p) {
      std::vector<double> out(N, 0.0);
      for (std::size_t k = 0; k < N; ++k) {
        if (p[k] == 0.0) continue;
        out[k] += offset * p[k];
        for (std::size_t i = 0; i < n; ++i) {
          if (row(static_cast<Eigen::Index>(i)) == 0.0) continue;
          const std::size_t target = up[k * n + i];
          if (target < N) out[target] += row(static_cast<Eigen::Index>(i)) * p[k];
        }
      }
      return out;
    };
    auto& polys = per_dim[j];
    polys.resize(static_cast<std::size_t>(d_) + 1);
    polys[0].assign(N, 0.0);
    polys[0][0] = 1.0;
    for (int r = 0; r < d_; ++r) {
      std::vector<double> next = times_z(polys[static_cast<std::size_t>(r)]);
      const double a = 1.0 / std::sqrt(static_cast<double>(r + 1));
      const double b = std::sqrt(static_cast<double>(r));
      for (std::size_t k = 0; k < N; ++k) {
        next[k] *= a;
        if (r > 0) next[k] -= a * b * polys[static_cast<std::size_t>(r) - 1][k];
      }
      polys[static_cast<std::size_t>(r) + 1] = std::move(next);
    }
  }

  auto to_sparse = [](const std::vector<double>& p) {
    SparsePolynomial s;
    for (std::size_t k = 0; k < p.size(); ++k)
      if (p[k] != 0.0) s.emplace_back(k, p[k]);
    return s;
  };

  std::vector<SparsePolynomial>& out = monomials_->coefficients;
  out.resize(N);
  for (std::size_t k = 0; k < N; ++k) {
    const MultiIndex& alpha = indices_[k];
    SparsePolynomial acc = to_sparse(per_dim[0][static_cast<std::size_t>(alpha[0])]);
    for (std::size_t j = 1; j < n; ++j) {
      const SparsePolynomial factor = to_sparse(per_dim[j][static_cast<std::size_t>(alpha[j])]);
      std::vector<double> prod(N, 0.0);
      for (const auto& [pa, ca] : acc) {
        const std::uint64_t ka = pack(indices_[pa]);
        for (const auto& [pb, cb] : factor) {
          // Total degree is |alpha| <= d, so the product term is always in the basis.
          const std::size_t target = lookup_.at(ka + pack(indices_[pb]));
          prod[target] += ca * cb;
        }
      }
      acc = to_sparse(prod);
    }
    out[k] = std::move(acc);
  }
}

const SparsePolynomial& HermiteBasis::monomial_coefficients(std::size_t k) const {
  std::call_once(monomials_->once, [this] { build_monomials(); });
  return monomials_->coefficients.at(k);
}

Eigen::MatrixXd HermiteBasis::monomial_matrix() const {
  const std::size_t N = size();
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
  for (std::size_t k = 0; k < N; ++k)
    for (const auto& [pos, v] : monomial_coefficients(k))
      c(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(pos)) = v;
  return c;
}

}  // namespace homog::hermite
