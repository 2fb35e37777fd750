#include "homog/spde.hpp"

#include "homog/errors.hpp"
#include "homog/linalg.hpp"
#include "homog/rng.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numbers>

namespace homog::spde {

namespace {

constexpr int kMaxVars = 16;

int frequency(int i) { return (i % 2 == 1) ? (i + 1) / 2 : i / 2; }

double ipow(double v, int t) {
  double r = 1.0;
  for (int k = 0; k < t; ++k) r *= v;
  return r;
}

}  // namespace

double eigenvalue(int i) {
  if (i < 1) throw UsageError("mode index must be >= 1");
  const double k = frequency(i);
  return 1.0 - k * k;
}

double eigenfunction(int i, double x) {
  if (i < 1) throw UsageError("mode index must be >= 1");
  const double k = frequency(i);
  const double c = 1.0 / std::sqrt(std::numbers::pi);
  return (i % 2 == 1) ? c * std::sin(k * x) : c * std::cos(k * x);
}

double eigenfunction_dx(int i, double x) {
  if (i < 1) throw UsageError("mode index must be >= 1");
  const double k = frequency(i);
  const double c = 1.0 / std::sqrt(std::numbers::pi);
  return (i % 2 == 1) ? c * k * std::cos(k * x) : -c * k * std::sin(k * x);
}

std::uint64_t Polynomial::key(const std::vector<int>& exponents) {
  if (exponents.size() > kMaxVars) throw UsageError("polynomial supports at most 16 variables");
  std::uint64_t k = 0;
  for (std::size_t v = 0; v < exponents.size(); ++v) {
    if (exponents[v] < 0 || exponents[v] > 15) throw UsageError("polynomial exponent out of range");
    k |= static_cast<std::uint64_t>(exponents[v]) << (4 * v);
  }
  return k;
}

void Polynomial::add(std::uint64_t key, double coefficient) {
  if (coefficient == 0.0) return;
  terms_[key] += coefficient;
}

int Polynomial::degree() const {
  int d = 0;
  for (const auto& [k, c] : terms_) {
    int s = 0;
    for (int v = 0; v < vars_; ++v) s += exponent(k, v);
    d = std::max(d, s);
  }
  return d;
}

double Polynomial::evaluate(const Eigen::VectorXd& v) const {
  if (v.size() != vars_) throw UsageError("polynomial evaluated with the wrong number of variables");
  double s = 0.0;
  for (const auto& [k, c] : terms_) {
    double t = c;
    for (int i = 0; i < vars_; ++i) t *= ipow(v(i), exponent(k, i));
    s += t;
  }
  return s;
}

Polynomial Polynomial::derivative(int var) const {
  Polynomial out(vars_);
  for (const auto& [k, c] : terms_) {
    const int e = exponent(k, var);
    if (e == 0) continue;
    out.add(k - (std::uint64_t{1} << (4 * var)), c * e);
  }
  return out;
}

Polynomial Polynomial::fix_leading(const Eigen::VectorXd& values) const {
  const int L = static_cast<int>(values.size());
  if (L > vars_) throw UsageError("too many fixed variables");
  Polynomial out(vars_ - L);
  for (const auto& [k, c] : terms_) {
    double t = c;
    for (int i = 0; i < L; ++i) t *= ipow(values(i), exponent(k, i));
    out.add(k >> (4 * L), t);
  }
  return out;
}

SpectralSpde::SpectralSpde(SpdeConfig cfg) : cfg_(std::move(cfg)) {
  const int n = cfg_.modes;
  if (n < 1 || n + 2 > kMaxVars) throw UsageError("SPDE fast mode count must be in [1, 14]");
  if (cfg_.q.empty()) cfg_.q.assign(static_cast<std::size_t>(n), 1.0);
  if (static_cast<int>(cfg_.q.size()) != n) throw UsageError("SPDE needs one noise amplitude per fast mode");
  for (double q : cfg_.q)
    if (!(q > 0.0)) throw UsageError("SPDE noise amplitudes must be positive");
  if (!(cfg_.eps > 0.0)) throw UsageError("eps must be positive");
  if (cfg_.x0.size() != 2) throw UsageError("SPDE initial state must have two components");
  grid_ = cfg_.grid > 0 ? cfg_.grid : std::max(80, 8 * (n + 2));
  if (grid_ < 8 * (n + 2)) throw UsageError("SPDE grid too coarse: need at least 8 (n + 2) points");

  const int M = n + 2;
  nodes_.resize(static_cast<std::size_t>(grid_));
  basis_.resize(grid_, M);
  basis_dx_.resize(grid_, M);
  for (int g = 0; g < grid_; ++g) {
    const double x = -std::numbers::pi + 2.0 * std::numbers::pi * g / grid_;
    nodes_[static_cast<std::size_t>(g)] = x;
    for (int v = 0; v < M; ++v) {
      basis_(g, v) = eigenfunction(v + 1, x);
      basis_dx_(g, v) = eigenfunction_dx(v + 1, x);
    }
  }

  // F(u) = 2 u^3 u_x, so <F, e_i> = 2 sum c_j c_k c_l c_m <e_j e_k e_l e_m', e_i>.
  const double w = 2.0 * std::numbers::pi / grid_;
  a_.assign(2, Polynomial(M));
  b_.assign(static_cast<std::size_t>(n), Polynomial(M));
  Eigen::VectorXd triple(grid_);
  for (int j = 0; j < M; ++j)
    for (int k = j; k < M; ++k)
      for (int l = k; l < M; ++l) {
        const int mult = (j == k && k == l) ? 1 : (j == k || k == l) ? 3 : 6;
        triple = basis_.col(j).cwiseProduct(basis_.col(k)).cwiseProduct(basis_.col(l));
        for (int m = 0; m < M; ++m) {
          const Eigen::VectorXd t = triple.cwiseProduct(basis_dx_.col(m));
          std::vector<int> e(static_cast<std::size_t>(M), 0);
          ++e[static_cast<std::size_t>(j)];
          ++e[static_cast<std::size_t>(k)];
          ++e[static_cast<std::size_t>(l)];
          ++e[static_cast<std::size_t>(m)];
          const std::uint64_t key = Polynomial::key(e);
          for (int i = 0; i < M; ++i) {
            const double c = 2.0 * mult * w * t.dot(basis_.col(i));
            if (std::abs(c) < 1e-13) continue;  // zero by orthogonality up to round-off
            if (i < 2)
              a_[static_cast<std::size_t>(i)].add(key, c);
            else
              b_[static_cast<std::size_t>(i - 2)].add(key, c);
          }
        }
      }
}

double SpectralSpde::variance(int k) const {
  const double q = noise(k);
  return q * q / (2.0 * rate(k));
}

void SpectralSpde::project_nonlinearity(const Eigen::VectorXd& x, const Eigen::VectorXd& y, Eigen::VectorXd& a,
                                        Eigen::VectorXd& b) const {
  const int n = cfg_.modes;
  if (x.size() != 2 || y.size() != n) throw UsageError("SPDE state has the wrong dimension");
  Eigen::VectorXd c(n + 2);
  c << x, y;
  const Eigen::ArrayXd u = basis_ * c;
  const Eigen::ArrayXd ux = basis_dx_ * c;
  const Eigen::VectorXd F = (2.0 * u * u * u * ux).matrix();
  const Eigen::VectorXd proj = (2.0 * std::numbers::pi / grid_) * (basis_.transpose() * F);
  a = proj.head(2);
  b = proj.tail(n);
}

SpdeModel::SpdeModel(const SpectralSpde& spde, int d)
    : spde_(&spde),
      d_(d),
      basis_(Eigen::VectorXd::Zero(spde.modes()), Eigen::MatrixXd::Identity(spde.modes(), spde.modes()), d) {
  const int n = spde.modes();
  if (n > 8) throw UsageError("SPDE homogenization supports at most 8 fast modes");
  if (d < 4) throw UsageError("homogenization degree must be at least the degree of a in y (4)");

  eig_.resize(static_cast<Eigen::Index>(basis_.size()));
  for (std::size_t p = 0; p < basis_.size(); ++p) {
    double s = 0.0;
    for (int k = 0; k < n; ++k) s += basis_.index(p)[static_cast<std::size_t>(k)] * spde.rate(k);
    eig_(static_cast<Eigen::Index>(p)) = s;
  }

  // z^t = sum_r M[t][r] H_r(z), from inverting the triangular coefficient table.
  const int tmax = 15;
  const auto coef = hermite::hermite_1d_coefficients(tmax);
  mono_to_hermite_.assign(tmax + 1, std::vector<double>(tmax + 1, 0.0));
  for (int t = 0; t <= tmax; ++t) {
    // z^t = (1/coef[t][t]) (H_t - sum_{s<t} coef[t][s] z^s)
    std::vector<double>& row = mono_to_hermite_[static_cast<std::size_t>(t)];
    const double lead = coef[static_cast<std::size_t>(t)][static_cast<std::size_t>(t)];
    row[static_cast<std::size_t>(t)] = 1.0 / lead;
    for (int s = 0; s < t; ++s) {
      const double cs = coef[static_cast<std::size_t>(t)][static_cast<std::size_t>(s)];
      if (cs == 0.0) continue;
      for (int r = 0; r <= s; ++r)
        row[static_cast<std::size_t>(r)] -= cs / lead * mono_to_hermite_[static_cast<std::size_t>(s)][static_cast<std::size_t>(r)];
    }
  }
  scale_.resize(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const double s = std::sqrt(spde.variance(k));
    Eigen::VectorXd& sc = scale_[static_cast<std::size_t>(k)];
    sc.resize(tmax + 1);
    sc(0) = 1.0;
    for (int t = 1; t <= tmax; ++t) sc(t) = sc(t - 1) * s;
  }
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) da_dx_.push_back(spde.a_polynomial(i).derivative(j));
}

Eigen::VectorXd SpdeModel::hermite_coefficients(const Polynomial& py) const {
  const int n = spde_->modes();
  if (py.vars() != n) throw UsageError("expected a polynomial in the fast modes");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis_.size()));
  hermite::MultiIndex alpha(static_cast<std::size_t>(n), 0);
  for (const auto& [key, c] : py.terms()) {
    std::vector<int> beta(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) beta[static_cast<std::size_t>(k)] = Polynomial::exponent(key, k);
    // Expand prod_k s_k^{b_k} z_k^{b_k} one variable at a time.
    auto rec = [&](auto&& self, int k, double factor, int deg) -> void {
      if (deg > d_) return;
      if (k == n) {
        out(static_cast<Eigen::Index>(basis_.position(alpha))) += c * factor;
        return;
      }
      const int bk = beta[static_cast<std::size_t>(k)];
      const auto& row = mono_to_hermite_[static_cast<std::size_t>(bk)];
      for (int r = bk; r >= 0; r -= 2) {
        alpha[static_cast<std::size_t>(k)] = r;
        self(self, k + 1, factor * scale_[static_cast<std::size_t>(k)](bk) * row[static_cast<std::size_t>(r)], deg + r);
      }
      alpha[static_cast<std::size_t>(k)] = 0;
    };
    rec(rec, 0, 1.0, 0);
  }
  return out;
}

coeffs::EffectiveCoefficients SpdeModel::at(const Eigen::VectorXd& x) const {
  if (x.size() != 2) throw UsageError("SPDE slow state must have two components");
  const int n = spde_->modes();
  const Eigen::Index N = static_cast<Eigen::Index>(basis_.size());
  std::vector<Eigen::VectorXd> a(2), phi(2);
  for (int i = 0; i < 2; ++i) {
    a[static_cast<std::size_t>(i)] = hermite_coefficients(spde_->a_polynomial(i).fix_leading(x));
    phi[static_cast<std::size_t>(i)] = Eigen::VectorXd::Zero(N);
    for (Eigen::Index p = 1; p < N; ++p) phi[static_cast<std::size_t>(i)](p) = a[static_cast<std::size_t>(i)](p) / eig_(p);
  }

  coeffs::EffectiveCoefficients c;
  c.x = x;
  c.F = Eigen::VectorXd::Zero(2);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const Eigen::VectorXd da = hermite_coefficients(da_dx_[static_cast<std::size_t>(i * 2 + j)].fix_leading(x));
      double s = 0.0;
      for (Eigen::Index p = 1; p < N; ++p) s += da(p) / eig_(p) * a[static_cast<std::size_t>(j)](p);
      c.F(i) += s;
    }
  if (spde_->config().include_b_term) {
    for (int k = 0; k < n; ++k) {
      const Eigen::VectorXd bk = hermite_coefficients(spde_->b_polynomial(k).fix_leading(x));
      const double inv_s = 1.0 / std::sqrt(spde_->variance(k));
      for (Eigen::Index p = 0; p < N; ++p) {
        if (bk(p) == 0.0) continue;
        hermite::MultiIndex up = basis_.index(static_cast<std::size_t>(p));
        ++up[static_cast<std::size_t>(k)];
        if (!basis_.contains(up)) continue;
        const auto q = static_cast<Eigen::Index>(basis_.position(up));
        const double g = std::sqrt(static_cast<double>(up[static_cast<std::size_t>(k)])) * inv_s * bk(p);
        for (int i = 0; i < 2; ++i) c.F(i) += phi[static_cast<std::size_t>(i)](q) * g;
      }
    }
  }
  c.A0.resize(2, 2);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) c.A0(i, j) = phi[static_cast<std::size_t>(i)].dot(a[static_cast<std::size_t>(j)]);
  c.D = c.A0 + c.A0.transpose();
  c.D = 0.5 * (c.D + c.D.transpose()).eval();
  c.A = coeffs::cholesky_factor(c.D);
  return c;
}

SpdeMicro::SpdeMicro(const SpectralSpde& spde) : spde_(&spde) {}

Eigen::MatrixXd SpdeMicro::burst(const Eigen::VectorXd& x, const hmm::HmmConfig& cfg, std::uint32_t burst) const {
  cfg.validate();
  if (x.size() != 2) throw UsageError("SPDE slow state must have two components");
  const int n = spde_->modes();
  const long N = cfg.samples();
  const long total = cfg.discard() + N;
  const double h = cfg.dtau();
  Eigen::VectorXd decay(n), kick(n), y(n);
  for (int k = 0; k < n; ++k) {
    const double s = std::sqrt(spde_->variance(k));
    decay(k) = std::exp(-spde_->rate(k) * h);
    kick(k) = s * std::sqrt(1.0 - decay(k) * decay(k));
    y(k) = s * rng::normal(cfg.seed, {rng::Stream::initial, burst, 0, static_cast<std::uint32_t>(k)});
  }
  Eigen::MatrixXd out(N, n);
  for (long s = 0; s < total; ++s) {
    for (int k = 0; k < n; ++k)
      y(k) = decay(k) * y(k) +
             kick(k) * rng::normal(cfg.seed, {rng::Stream::micro, burst, static_cast<std::uint64_t>(s),
                                              static_cast<std::uint32_t>(k)});
    if (s >= cfg.discard()) out.row(s - cfg.discard()) = y.transpose();
  }
  return out;
}

hmm::Observables SpdeMicro::observe(const Eigen::VectorXd& x, const Eigen::MatrixXd& samples) const {
  const int n = spde_->modes();
  const int M = n + 2;
  const int G = spde_->grid();
  const Eigen::Index N = samples.rows();
  if (samples.cols() != n) throw UsageError("SPDE samples have the wrong dimension");

  Eigen::MatrixXd E(G, M), Ex(G, M);
  for (int g = 0; g < G; ++g) {
    const double xg = -std::numbers::pi + 2.0 * std::numbers::pi * g / G;
    for (int v = 0; v < M; ++v) {
      E(g, v) = eigenfunction(v + 1, xg);
      Ex(g, v) = eigenfunction_dx(v + 1, xg);
    }
  }
  const double w = 2.0 * std::numbers::pi / G;
  // d a^i / d c_v = w sum_g (6 u^2 u_x e_v + 2 u^3 e_v') e_i
  Eigen::MatrixXd K1(G, 2 * M), K2(G, 2 * M);
  for (int i = 0; i < 2; ++i)
    for (int v = 0; v < M; ++v) {
      K1.col(i * M + v) = E.col(v).cwiseProduct(E.col(i));
      K2.col(i * M + v) = Ex.col(v).cwiseProduct(E.col(i));
    }

  // Columns: drift pairs (i, j) for slow j, then (i, k) for fast k.
  const int C = 2 * 2 + 2 * n;
  hmm::Observables obs;
  obs.left.resize(N, C);
  obs.right.resize(N, C);
  obs.f.resize(N, 2);
  obs.rate = Eigen::VectorXd::Zero(C);
  obs.alpha_avg = Eigen::MatrixXd::Zero(2, 2);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      obs.target.push_back(i);
    }
  }
  const bool with_b = spde_->config().include_b_term;
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < n; ++k) {
      obs.target.push_back(i);
      obs.rate(4 + i * n + k) = spde_->rate(k);
    }

  constexpr Eigen::Index chunk = 4096;
  const Eigen::Index chunks = (N + chunk - 1) / chunk;
  std::exception_ptr failure;
#pragma omp parallel for schedule(static)
  for (Eigen::Index ch = 0; ch < chunks; ++ch) {
    try {
      const Eigen::Index s0 = ch * chunk;
      const Eigen::Index B = std::min(chunk, N - s0);
      Eigen::MatrixXd coeffs(M, B);
      coeffs.row(0).setConstant(x(0));
      coeffs.row(1).setConstant(x(1));
      coeffs.bottomRows(n) = samples.middleRows(s0, B).transpose();
      const Eigen::ArrayXXd u = (E * coeffs).array();
      const Eigen::ArrayXXd ux = (Ex * coeffs).array();
      const Eigen::ArrayXXd u2 = u * u;
      const Eigen::MatrixXd F = (2.0 * u2 * u * ux).matrix();
      const Eigen::MatrixXd proj = w * (E.transpose() * F);  // M x B
      const Eigen::MatrixXd deriv =
          w * (K1.transpose() * (6.0 * u2 * ux).matrix() + K2.transpose() * (2.0 * u2 * u).matrix());  // 2M x B
      for (Eigen::Index b = 0; b < B; ++b) {
        const Eigen::Index s = s0 + b;
        for (int i = 0; i < 2; ++i) {
          obs.f(s, i) = proj(i, b);
          for (int j = 0; j < 2; ++j) {
            obs.left(s, i * 2 + j) = deriv(i * M + j, b);
            obs.right(s, i * 2 + j) = proj(j, b);
          }
          for (int k = 0; k < n; ++k) {
            const int c = 4 + i * n + k;
            obs.left(s, c) = deriv(i * M + 2 + k, b);
            obs.right(s, c) = with_b ? proj(2 + k, b) : 0.0;
          }
        }
      }
    } catch (...) {
#pragma omp critical(homog_spde_observe_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return obs;
}

ReducedTrajectory simulate_reduced(const SpectralSpde& spde, const Eigen::VectorXd& x0, const Eigen::VectorXd& y0,
                                   double micro_dt, double T, std::uint64_t seed, int replica) {
  const int n = spde.modes();
  const double eps = spde.config().eps;
  if (x0.size() != 2 || y0.size() != n) throw UsageError("SPDE initial state has the wrong dimension");
  double max_rate = 0.0;
  for (int k = 0; k < n; ++k) max_rate = std::max(max_rate, spde.rate(k));
  if (!(micro_dt > 0.0) || micro_dt * max_rate > 0.1 * eps * eps)
    throw UsageError("micro step must satisfy micro_dt <= eps^2 / (10 max|lambda|)");
  if (!(T > 0.0)) throw UsageError("T must be positive");
  const auto steps = static_cast<std::size_t>(std::ceil(T / micro_dt - 1e-9));

  ReducedTrajectory out;
  Eigen::VectorXd x = x0, y = y0, a, b;
  out.slow.push_back(x);
  const double sq = std::sqrt(micro_dt);
  for (std::size_t s = 0; s < steps; ++s) {
    spde.project_nonlinearity(x, y, a, b);
    x += micro_dt / eps * a;
    for (int k = 0; k < n; ++k) {
      const double xi = rng::normal(seed, {rng::Stream::fast, static_cast<std::uint32_t>(replica), s,
                                           static_cast<std::uint32_t>(k)});
      y(k) += micro_dt * (-spde.rate(k) * y(k) / (eps * eps) + b(k) / eps) + spde.noise(k) / eps * sq * xi;
    }
    if (!x.allFinite() || !y.allFinite()) throw BlowUpError(s, "reduced SPDE state is not finite");
    out.slow.push_back(x);
  }
  out.fast_final = y;
  return out;
}

}  // namespace homog::spde
