#include "homog/coeffs.hpp"
#include "homog/errors.hpp"
#include "homog/problems.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace homog;
using coeffs::SpectralModel;

namespace {

Eigen::VectorXd scalar(double x) { return Eigen::VectorXd::Constant(1, x); }

}  // namespace

TEST_SUITE("coeffs") {
  TEST_CASE("Ornstein-Uhlenbeck coefficients are exact") {
    const auto p = problems::make("ou");
    for (int d : {1, 2, 5}) {
      const SpectralModel m(p, d);
      for (double x : {-2.0, -0.3, 0.0, 0.9, 1.7}) {
        const auto c = m.at(scalar(x));
        CHECK(std::abs(c.F(0) - std::sin(x) * std::cos(x)) <= 1e-12);
        CHECK(std::abs(c.D(0, 0) - 2 * std::sin(x) * std::sin(x)) <= 1e-12);
      }
    }
    const SpectralModel a(p, 3), b(p, 8);
    for (double x : {-1.1, 0.4, 2.2}) {
      CHECK(std::abs(a.at(scalar(x)).F(0) - b.at(scalar(x)).F(0)) <= 1e-12);
      CHECK(std::abs(a.at(scalar(x)).D(0, 0) - b.at(scalar(x)).D(0, 0)) <= 1e-12);
    }
  }

  TEST_CASE("slow-independent drift gives zero F") {
    const auto p = problems::from_strings("frozen", 1, 1, "y0^4/4 - y0^2/2", {"y0^3 - y0"}, {}, 0.5);
    const SpectralModel m(p, 16);
    CHECK(m.at(scalar(0.7)).F(0) == 0.0);
  }

  TEST_CASE("pure slow noise") {
    const auto p = problems::from_strings("noise", 2, 1, "y0^2/2", {"0", "0"}, {{"1", "0"}, {"0", "1"}}, 1.0);
    const SpectralModel m(p, 4);
    Eigen::VectorXd x(2);
    x << 0.3, -0.2;
    const auto c = m.at(x);
    CHECK((c.D - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(c.F.cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("alpha depending on the fast variable is averaged") {
    // alpha = y: E[y^2] = 1 under the standard normal.
    const auto p = problems::from_strings("avg", 1, 1, "y0^2/2", {"0"}, {{"y0"}}, 1.0);
    const SpectralModel m(p, 4);
    CHECK(m.at(scalar(0.0)).D(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("diffusion is symmetric and factorized") {
    for (const char* name : {"single_well_2d", "three_well"}) {
      const auto p = problems::make(name);
      const SpectralModel m(p, 12);
      std::mt19937_64 rng(4);
      std::uniform_real_distribution<double> u(-1.5, 1.5);
      for (int t = 0; t < 5; ++t) {
        Eigen::VectorXd x(2);
        x << u(rng), u(rng);
        const auto c = m.at(x);
        CHECK((c.D - c.D.transpose()).cwiseAbs().maxCoeff() == 0.0);
        CHECK((c.A * c.A.transpose() - c.D).cwiseAbs().maxCoeff() <= 1e-12 * (1 + c.D.cwiseAbs().maxCoeff()));
        CHECK(c.A(0, 1) == 0.0);
      }
    }
  }

  TEST_CASE("Cholesky factor examples") {
    Eigen::MatrixXd d(2, 2);
    d << 4, 0, 0, 9;
    Eigen::MatrixXd a = coeffs::cholesky_factor(d);
    CHECK(a(0, 0) == doctest::Approx(2.0));
    CHECK(a(1, 1) == doctest::Approx(3.0));
    CHECK(a(1, 0) == 0.0);

    d << 2, 1, 1, 2;
    a = coeffs::cholesky_factor(d);
    CHECK(a(0, 0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
    CHECK(a(1, 0) == doctest::Approx(1 / std::sqrt(2.0)).epsilon(1e-15));
    CHECK(a(1, 1) == doctest::Approx(std::sqrt(1.5)).epsilon(1e-15));
    CHECK(a(0, 1) == 0.0);

    d << 1, 2, 2, 1;
    CHECK_THROWS_AS(coeffs::cholesky_factor(d), NotPositiveSemidefiniteError);

    d << 1, 1, 1, 1 - 1e-14;  // rank one up to round-off
    a = coeffs::cholesky_factor(d);
    CHECK(a(1, 1) == 0.0);
  }

  TEST_CASE("random positive semidefinite matrices reconstruct") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> g;
    for (int t = 0; t < 50; ++t) {
      const int m = 1 + t % 4;
      const int rank = 1 + t % m;
      Eigen::MatrixXd b(m, rank);
      for (auto& v : b.reshaped()) v = g(rng);
      const Eigen::MatrixXd D = b * b.transpose();
      const Eigen::MatrixXd A = coeffs::cholesky_factor(D);
      CHECK((A * A.transpose() - D).cwiseAbs().maxCoeff() <= 1e-12 * (1 + D.cwiseAbs().maxCoeff()));
      CHECK(A.triangularView<Eigen::StrictlyUpper>().toDenseMatrix().cwiseAbs().maxCoeff() == 0.0);
    }
  }

  TEST_CASE("bistable drift converges super-algebraically") {
    const auto p = problems::make("bistable");
    const double ref = SpectralModel(p, 40).at(scalar(0.5)).F(0);
    const std::vector<int> ds = {8, 12, 16, 20, 24, 28};
    std::vector<double> err;
    for (int d : ds) err.push_back(std::abs(SpectralModel(p, d).at(scalar(0.5)).F(0) - ref));
    for (std::size_t i = 1; i < err.size(); ++i) CHECK(err[i] <= err[i - 1]);
    // The error descends in a staircase with a period of about six degrees,
    // so local slopes are taken over windows of width 8: d = 8, 16, 24.
    const double s1 = std::log(err[0] / err[2]) / std::log(16.0 / 8.0);
    const double s2 = std::log(err[2] / err[4]) / std::log(24.0 / 16.0);
    CHECK(s2 > s1);
  }
}
