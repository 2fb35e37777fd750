#include "homog/oracle.hpp"

#include "homog/errors.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace homog::oracle {

namespace {

// Relative weights below this are treated as empty cells (exp(-645) ~ 1e-280).
constexpr double kActiveLogWeight = 645.0;

Eigen::VectorXd eval_all(const expr::Expression& e, const Eigen::VectorXd& x, const GridSolution& grid) {
  const Eigen::Index count = grid.phi.size();
  Eigen::VectorXd out(count);
  for (Eigen::Index c = 0; c < count; ++c) out(c) = e(x, grid.point(c));
  return out;
}

}  // namespace

Box default_box(const gibbs::GibbsMeasure& g, double width) {
  Box b;
  for (int k = 0; k < g.dim(); ++k) {
    const double s = std::sqrt(g.raw_cov()(k, k));
    b.lo.push_back(g.mean()(k) - width * s);
    b.hi.push_back(g.mean()(k) + width * s);
  }
  return b;
}

Eigen::VectorXd GridSolution::point(Eigen::Index c) const {
  Eigen::VectorXd y(dim);
  for (int k = dim - 1; k >= 0; --k) {
    const int nk = cells[static_cast<std::size_t>(k)];
    y(k) = nodes[static_cast<std::size_t>(k)](c % nk);
    c /= nk;
  }
  return y;
}

double GridSolution::cell_volume() const {
  double v = 1.0;
  for (double hk : h) v *= hk;
  return v;
}

double GridSolution::average(const Eigen::VectorXd& v) const { return cell_volume() * density.dot(v); }

GridSolution fd_solve(const expr::Expression& V, const expr::Expression& f, const Eigen::VectorXd& x, const Box& box,
                      const std::vector<int>& cells) {
  const int n = V.fast_dim();
  if (n < 1 || n > 2) throw UsageError("finite-difference oracle supports one or two fast dimensions");
  if (static_cast<int>(box.lo.size()) != n || static_cast<int>(box.hi.size()) != n ||
      static_cast<int>(cells.size()) != n)
    throw UsageError("oracle box and mesh must match the fast dimension");
  GridSolution grid;
  grid.dim = n;
  grid.box = box;
  grid.cells = cells;
  Eigen::Index count = 1;
  for (int k = 0; k < n; ++k) {
    const int nk = cells[static_cast<std::size_t>(k)];
    if (nk < 4 || !(box.hi[static_cast<std::size_t>(k)] > box.lo[static_cast<std::size_t>(k)]))
      throw UsageError("oracle mesh needs at least 4 cells on a nonempty interval");
    const double hk = (box.hi[static_cast<std::size_t>(k)] - box.lo[static_cast<std::size_t>(k)]) / nk;
    grid.h.push_back(hk);
    grid.nodes.push_back(Eigen::VectorXd::LinSpaced(nk, box.lo[static_cast<std::size_t>(k)] + 0.5 * hk,
                                                    box.hi[static_cast<std::size_t>(k)] - 0.5 * hk));
    count *= nk;
  }

  Eigen::VectorXd logw(count), fv(count);
  for (Eigen::Index c = 0; c < count; ++c) {
    const Eigen::VectorXd y = grid.point(c);
    logw(c) = -V(x, y);
    fv(c) = f(x, y);
  }
  const double vmax = logw.maxCoeff();
  Eigen::Index pivot = 0;
  logw.maxCoeff(&pivot);
  Eigen::VectorXd rho = (logw.array() - vmax).exp();
  // Boundary mass check on the box faces, against the grid-normalized
  // density so the additive constant in V does not matter.
  const double log_z = vmax + std::log(rho.sum() * grid.cell_volume());
  double boundary_max = 0.0;
  {
    const int samples = 257;
    Eigen::VectorXd y(n);
    for (int k = 0; k < n; ++k)
      for (double side : {box.lo[static_cast<std::size_t>(k)], box.hi[static_cast<std::size_t>(k)]})
        for (int s = 0; s < (n == 1 ? 1 : samples); ++s) {
          y(k) = side;
          if (n == 2) {
            const int o = 1 - k;
            y(o) = box.lo[static_cast<std::size_t>(o)] +
                   (box.hi[static_cast<std::size_t>(o)] - box.lo[static_cast<std::size_t>(o)]) * s / (samples - 1);
          }
          boundary_max = std::max(boundary_max, std::exp(-V(x, y) - log_z));
        }
  }
  if (boundary_max > 1e-6) throw DomainError("oracle box too small: exp(-V) on the boundary exceeds 1e-6");
  if (boundary_max > 1e-12) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "exp(-V) on the oracle box boundary reaches %.3g", boundary_max);
    grid.warnings.emplace_back(buf);
  }

  const double vol = grid.cell_volume();
  grid.density = rho / (vol * rho.sum());

  // Compatibility: remove the weighted mean of f.
  const double fmean = rho.dot(fv) / rho.sum();
  const Eigen::VectorXd fc = fv.array() - fmean;
  const Eigen::VectorXd src = rho.cwiseProduct(fc);

  auto face_weight = [&](const Eigen::VectorXd& y) { return std::exp(-V(x, y) - vmax); };

  grid.phi = Eigen::VectorXd::Zero(count);
  Eigen::VectorXd applied = Eigen::VectorXd::Zero(count);
  if (n == 1) {
    const double h = grid.h[0];
    const Eigen::Index N = count;
    // Face c + 1/2 carries flux J_c = rho_face (phi_{c+1} - phi_c) / h^2 = -sum_{c' <= c} src.
    // Summed from whichever end is nearer the pivot side to limit cancellation.
    Eigen::VectorXd J(N - 1), wf(N - 1);
    double acc = 0.0;
    for (Eigen::Index c = 0; c < N - 1; ++c) {
      Eigen::VectorXd y(1);
      y(0) = box.lo[0] + (c + 1) * h;
      wf(c) = face_weight(y);
      if (c < pivot) {
        acc -= src(c);
        J(c) = acc;
      }
    }
    acc = 0.0;
    for (Eigen::Index c = N - 2; c >= pivot; --c) {
      acc += src(c + 1);
      J(c) = acc;
    }
    for (Eigen::Index c = pivot; c < N - 1; ++c)
      grid.phi(c + 1) = grid.phi(c) + (wf(c) > 1e-300 ? h * h * J(c) / wf(c) : 0.0);
    for (Eigen::Index c = pivot - 1; c >= 0; --c)
      grid.phi(c) = grid.phi(c + 1) - (wf(c) > 1e-300 ? h * h * J(c) / wf(c) : 0.0);
    for (Eigen::Index c = 0; c < N - 1; ++c) {
      const double flux = wf(c) * (grid.phi(c + 1) - grid.phi(c)) / (h * h);
      applied(c) -= flux;
      applied(c + 1) += flux;
    }
  } else {
    const int n0 = cells[0], n1 = cells[1];
    const double h0 = grid.h[0], h1 = grid.h[1];
    std::vector<Eigen::Index> slot(static_cast<std::size_t>(count), -1);
    Eigen::Index active = 0;
    for (Eigen::Index c = 0; c < count; ++c)
      if (c != pivot && logw(c) - vmax > -kActiveLogWeight) slot[static_cast<std::size_t>(c)] = active++;
    std::vector<Eigen::Triplet<double>> trip;
    struct Face {
      Eigen::Index a, b;
      double w;
    };
    std::vector<Face> faces;
    Eigen::VectorXd y(2);
    for (int i = 0; i < n0; ++i)
      for (int j = 0; j < n1; ++j) {
        const Eigen::Index c = static_cast<Eigen::Index>(i) * n1 + j;
        if (i + 1 < n0) {
          y << box.lo[0] + (i + 1) * h0, grid.nodes[1](j);
          faces.push_back({c, c + n1, face_weight(y) / (h0 * h0)});
        }
        if (j + 1 < n1) {
          y << grid.nodes[0](i), box.lo[1] + (j + 1) * h1;
          faces.push_back({c, c + 1, face_weight(y) / (h1 * h1)});
        }
      }
    for (const Face& fc2 : faces) {
      const Eigen::Index sa = slot[static_cast<std::size_t>(fc2.a)];
      const Eigen::Index sb = slot[static_cast<std::size_t>(fc2.b)];
      if (sa >= 0) trip.emplace_back(sa, sa, fc2.w);
      if (sb >= 0) trip.emplace_back(sb, sb, fc2.w);
      if (sa >= 0 && sb >= 0) {
        trip.emplace_back(sa, sb, -fc2.w);
        trip.emplace_back(sb, sa, -fc2.w);
      }
    }
    Eigen::SparseMatrix<double> K(active, active);
    K.setFromTriplets(trip.begin(), trip.end());
    // Empty cells (no weight) keep a unit diagonal so the system stays definite.
    for (Eigen::Index c = 0; c < count; ++c) {
      const Eigen::Index s = slot[static_cast<std::size_t>(c)];
      if (s >= 0 && K.coeff(s, s) == 0.0) K.coeffRef(s, s) = 1.0;
    }
    Eigen::VectorXd rhs(active);
    for (Eigen::Index c = 0; c < count; ++c)
      if (slot[static_cast<std::size_t>(c)] >= 0) rhs(slot[static_cast<std::size_t>(c)]) = src(c);
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(K);
    if (ldlt.info() != Eigen::Success) throw SolverError("oracle factorization failed");
    const Eigen::VectorXd sol = ldlt.solve(rhs);
    for (Eigen::Index c = 0; c < count; ++c)
      if (slot[static_cast<std::size_t>(c)] >= 0) grid.phi(c) = sol(slot[static_cast<std::size_t>(c)]);
    for (const Face& fc2 : faces) {
      const double flux = fc2.w * (grid.phi(fc2.b) - grid.phi(fc2.a));
      applied(fc2.a) -= flux;
      applied(fc2.b) += flux;
    }
  }

  const double scale = std::max(src.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  grid.residual = (applied - src).cwiseAbs().maxCoeff() / scale;
  grid.phi.array() -= grid.average(grid.phi);
  return grid;
}

double weighted_l2_error(const GridSolution& grid, const poisson::CellSolver& solver, const Eigen::VectorXd& psi) {
  const Eigen::Index count = grid.phi.size();
  const double vol = grid.cell_volume();
  const Eigen::VectorXd sq = grid.density.cwiseSqrt();
  Eigen::VectorXd spec(count);
  for (Eigen::Index c = 0; c < count; ++c) spec(c) = solver.evaluate(psi, grid.point(c));
  const double m_grid = grid.average(grid.phi);
  const double m_spec = vol * spec.dot(sq);
  const Eigen::VectorXd diff = (grid.phi.array() - m_grid).matrix().cwiseProduct(sq) - (spec - m_spec * sq);
  return vol * diff.squaredNorm();
}

GridCoefficients grid_coefficients(const FastSlowProblem& problem, const Eigen::VectorXd& x, const Box& box,
                                   const std::vector<int>& cells) {
  problem.validate();
  const int m = problem.m;
  const auto df = poisson::slow_gradients(problem.f, m);
  GridCoefficients out;
  for (int i = 0; i < m; ++i)
    out.solutions.push_back(fd_solve(problem.V, problem.f[static_cast<std::size_t>(i)], x, box, cells));
  const GridSolution& g0 = out.solutions.front();
  std::vector<Eigen::VectorXd> fvals;
  for (int i = 0; i < m; ++i) fvals.push_back(eval_all(problem.f[static_cast<std::size_t>(i)], x, g0));

  out.F = Eigen::VectorXd::Zero(m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      const GridSolution dphi =
          fd_solve(problem.V, df[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)], x, box, cells);
      out.F(i) += g0.average(dphi.phi.cwiseProduct(fvals[static_cast<std::size_t>(j)]));
    }
  Eigen::MatrixXd A0(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      A0(i, j) = g0.average(out.solutions[static_cast<std::size_t>(i)].phi.cwiseProduct(fvals[static_cast<std::size_t>(j)]));
  Eigen::MatrixXd alpha_avg = Eigen::MatrixXd::Zero(m, m);
  if (problem.p > 0) {
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        for (int c = 0; c < problem.p; ++c) {
          const Eigen::VectorXd ai = eval_all(problem.alpha[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)], x, g0);
          const Eigen::VectorXd aj = eval_all(problem.alpha[static_cast<std::size_t>(j)][static_cast<std::size_t>(c)], x, g0);
          alpha_avg(i, j) += g0.average(ai.cwiseProduct(aj));
        }
  }
  out.D = alpha_avg + A0 + A0.transpose();
  out.D = 0.5 * (out.D + out.D.transpose()).eval();
  return out;
}

double coefficient_error(const Eigen::VectorXd& F_a, const Eigen::MatrixXd& D_a, const Eigen::VectorXd& F_b,
                         const Eigen::MatrixXd& D_b) {
  if (F_a.size() != F_b.size() || D_a.rows() != D_b.rows() || D_a.cols() != D_b.cols())
    throw UsageError("coefficient shapes differ");
  return std::max((F_a - F_b).cwiseAbs().maxCoeff(), (D_a - D_b).cwiseAbs().maxCoeff());
}

}  // namespace homog::oracle
