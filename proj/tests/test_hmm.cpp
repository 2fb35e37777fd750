#include "homog/coeffs.hpp"
#include "homog/errors.hpp"
#include "homog/hmm.hpp"
#include "homog/problems.hpp"
#include "homog/rng.hpp"

#include <doctest.h>
#include <omp.h>

#include <cmath>

using namespace homog;
using hmm::HmmConfig;

namespace {

HmmConfig cfg(int p, std::uint64_t seed = 0) {
  HmmConfig c;
  c.p = p;
  c.seed = seed;
  return c;
}

Eigen::MatrixXd series(Eigen::Index rows, Eigen::Index cols, std::uint32_t tag) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      m(i, j) = rng::normal(1, {rng::Stream::test, tag, static_cast<std::uint64_t>(i), static_cast<std::uint32_t>(j)});
  return m;
}

}  // namespace

TEST_SUITE("hmm") {
  TEST_CASE("parameter schedule") {
    for (int p = 1; p <= 6; ++p) {
      const auto c = cfg(p);
      CHECK(c.dtau() == std::ldexp(1.0, -p));
      CHECK(c.discard() == 16);
      CHECK(c.ensemble() == 1);
      CHECK(c.samples() == 10L << (3 * p));
      CHECK(c.lags() == (1 << p) * p);
      CHECK(c.lags() < c.samples());
    }
    CHECK_THROWS_AS(cfg(0).validate(), UsageError);
  }

  TEST_CASE("bursts: length, reproducibility and micro-step count") {
    const hmm::GradientMicro micro(problems::make("ou"));
    const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 0.4);
    const auto a = micro.burst(x, cfg(3, 5), 2);
    const auto b = micro.burst(x, cfg(3, 5), 2);
    const auto c = micro.burst(x, cfg(3, 5), 3);
    CHECK(a.rows() == cfg(3).samples());
    CHECK(a.cols() == 1);
    CHECK((a.array() == b.array()).all());
    CHECK((a.array() != c.array()).any());
    for (int p = 2; p <= 4; ++p) {
      const auto est = hmm::estimate_at(micro, x, cfg(p), 0);
      CHECK(est.micro_steps == static_cast<std::size_t>(16 + 10 * (1L << (3 * p))));
    }
  }

  TEST_CASE("Ornstein-Uhlenbeck burst samples the stationary law") {
    const hmm::GradientMicro micro(problems::make("ou"));
    const auto c = cfg(4, 8);
    const auto y = micro.burst(Eigen::VectorXd::Zero(1), c, 0);
    const double var = (y.array() - y.mean()).square().mean();
    // y^2 decorrelates on a unit time scale: standard error sqrt(2 / (N dtau)).
    const double se = std::sqrt(2.0 / (static_cast<double>(c.samples()) * c.dtau()));
    CHECK(std::abs(var - 1.0) <= 3 * se);
  }

  TEST_CASE("zero drift leaves only the averaged slow noise") {
    const auto p = problems::from_strings("still", 1, 1, "y0^2/2", {"0"}, {{"2*y0"}}, 1.0);
    const hmm::GradientMicro micro(p);
    const Eigen::VectorXd x = Eigen::VectorXd::Zero(1);
    const auto c = cfg(3, 1);
    const auto samples = micro.burst(x, c, 0);
    const auto obs = micro.observe(x, samples);
    const auto est = hmm::estimate_coefficients(obs, c);
    CHECK(est.F(0) == 0.0);
    CHECK(est.D(0, 0) == doctest::Approx(4 * samples.array().square().mean()).epsilon(1e-12));
    CHECK(est.D(0, 0) == doctest::Approx(obs.alpha_avg(0, 0)).epsilon(1e-12));
  }

  TEST_CASE("Ornstein-Uhlenbeck estimates bracket the exact coefficients") {
    const auto p = problems::make("ou");
    const hmm::GradientMicro micro(p);
    const double x = 0.9;
    const double F = std::sin(x) * std::cos(x), D = 2 * std::sin(x) * std::sin(x);
    const int R = 50;
    double f1 = 0, f2 = 0, d1 = 0, d2 = 0;
    for (int r = 0; r < R; ++r) {
      const auto est = hmm::estimate_at(micro, Eigen::VectorXd::Constant(1, x), cfg(5, 100 + r), 0);
      f1 += est.F(0);
      f2 += est.F(0) * est.F(0);
      d1 += est.D(0, 0);
      d2 += est.D(0, 0) * est.D(0, 0);
    }
    const double fm = f1 / R, dm = d1 / R;
    const double fse = std::sqrt((f2 / R - fm * fm) / (R - 1)), dse = std::sqrt((d2 / R - dm * dm) / (R - 1));
    CHECK(std::abs(fm - F) <= 3 * fse);
    CHECK(std::abs(dm - D) <= 3 * dse);
  }

  TEST_CASE("drift error shrinks from p = 3 to p = 5") {
    const hmm::GradientMicro micro(problems::make("ou"));
    const double x = 0.9, F = std::sin(x) * std::cos(x);
    double e3 = 0, e5 = 0;
    for (int s = 0; s < 20; ++s) {
      e3 += std::abs(hmm::estimate_at(micro, Eigen::VectorXd::Constant(1, x), cfg(3, 500 + s), 0).F(0) - F);
      e5 += std::abs(hmm::estimate_at(micro, Eigen::VectorXd::Constant(1, x), cfg(5, 500 + s), 0).F(0) - F);
    }
    CHECK(e5 < e3);
  }

  TEST_CASE("lag sums: parallel kernel against the serial reference") {
    const auto L = series(5000, 6, 1), R = series(5000, 6, 2);
    const auto ref = hmm::paired_lag_sums_reference(L, R, 80);
    const int saved = omp_get_max_threads();
    omp_set_num_threads(1);
    const auto one = hmm::paired_lag_sums(L, R, 80);
    omp_set_num_threads(4);
    const auto four = hmm::paired_lag_sums(L, R, 80);
    omp_set_num_threads(saved);
    CHECK((one.array() == four.array()).all());
    CHECK((one - ref).cwiseAbs().maxCoeff() <= 1e-13);
    CHECK(one.rows() == 6);
    CHECK(one.cols() == 81);
    CHECK_THROWS_AS(hmm::paired_lag_sums(L, R, 5000), UsageError);
  }

  TEST_CASE("comparison error") {
    std::vector<Eigen::VectorXd> F(10, Eigen::VectorXd::Constant(2, 0.3));
    std::vector<Eigen::MatrixXd> A(10, Eigen::MatrixXd::Identity(2, 2));
    CHECK(hmm::error_Ep(F, A, F, A, 0.1, 1.0) == 0.0);
    auto G = F;
    for (auto& g : G) g(0) += 0.05;
    CHECK(hmm::error_Ep(G, A, F, A, 0.1, 1.0) == doctest::Approx(0.05).epsilon(1e-12));
    G.pop_back();
    CHECK_THROWS_AS(hmm::error_Ep(G, A, F, A, 0.1, 1.0), UsageError);
  }

  TEST_CASE("slope fit") {
    CHECK(hmm::log2_slope({3, 4, 5}, {0.125, 0.0625, 0.03125}) == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK_THROWS_AS(hmm::log2_slope({3}, {0.1}), UsageError);
  }
}
