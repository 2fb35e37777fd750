#include "homog/errors.hpp"
#include "homog/quadrature.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>
#include <random>

using namespace homog;
using quadrature::gauss_hermite_1d;
using quadrature::tensorize;

namespace {

double double_factorial_odd(int k) {  // (k-1)!! for even k
  double v = 1.0;
  for (int j = k - 1; j > 1; j -= 2) v *= j;
  return v;
}

// E[prod_j (mu_j + sd_j Z_j)^{beta_j}] for independent Z_j by binomial
// expansion and the standard normal moments.
double diagonal_gaussian_moment(const std::vector<int>& beta, const Eigen::VectorXd& mu, const Eigen::VectorXd& sd) {
  double total = 1.0;
  for (std::size_t j = 0; j < beta.size(); ++j) {
    double s = 0.0, binom = 1.0;
    for (int t = 0; t <= beta[j]; ++t) {
      if (t > 0) binom = binom * (beta[j] - t + 1) / t;
      if (t % 2) continue;
      s += binom * std::pow(mu(j), beta[j] - t) * std::pow(sd(j), t) * double_factorial_odd(t);
    }
    total *= s;
  }
  return total;
}

}  // namespace

TEST_SUITE("quadrature") {
  TEST_CASE("small rules") {
    const auto r1 = gauss_hermite_1d(1);
    REQUIRE(r1.nodes.size() == 1);
    CHECK(r1.nodes[0] == 0.0);
    CHECK(r1.weights[0] == doctest::Approx(1.0).epsilon(1e-15));
    const auto r2 = gauss_hermite_1d(2);
    CHECK(r2.nodes[0] == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(r2.nodes[1] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(r2.weights[0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(r2.weights[1] == doctest::Approx(0.5).epsilon(1e-14));
    const auto r5 = gauss_hermite_1d(5);
    double m8 = 0.0;
    for (int i = 0; i < 5; ++i) m8 += r5.weights[i] * std::pow(r5.nodes[i], 8);
    CHECK(m8 == doctest::Approx(105.0).epsilon(1e-10));
  }

  TEST_CASE("weights positive and normalized, nodes symmetric") {
    for (int N : {1, 2, 3, 7, 20, 50, 90}) {
      const auto r = gauss_hermite_1d(N);
      CHECK(std::abs(std::accumulate(r.weights.begin(), r.weights.end(), 0.0) - 1.0) <= 1e-13);
      for (int i = 0; i < N; ++i) {
        CHECK(r.weights[i] > 0.0);
        CHECK(std::abs(r.nodes[i] + r.nodes[N - 1 - i]) <= 1e-12 * (1 + std::abs(r.nodes[i])));
        if (i) CHECK(r.nodes[i] > r.nodes[i - 1]);
      }
    }
  }

  TEST_CASE("one-dimensional exactness up to degree 2N-1") {
    for (int N = 1; N <= 12; ++N) {
      const auto r = gauss_hermite_1d(N);
      for (int k = 0; k <= 2 * N - 1; ++k) {
        // Odd moments vanish; compare them against the size of the terms.
        double m = 0.0, scale = 0.0;
        for (int i = 0; i < N; ++i) {
          m += r.weights[i] * std::pow(r.nodes[i], k);
          scale += r.weights[i] * std::pow(std::abs(r.nodes[i]), k);
        }
        const double exact = k % 2 ? 0.0 : double_factorial_odd(k);
        CHECK(std::abs(m - exact) <= 1e-10 * std::max(1.0, scale));
      }
    }
  }

  TEST_CASE("tensor rules") {
    const auto r = tensorize(gauss_hermite_1d(2), 2, Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2));
    REQUIRE(r.size() == 4);
    for (std::size_t q = 0; q < 4; ++q) {
      CHECK(std::abs(std::abs(r.nodes(0, static_cast<Eigen::Index>(q))) - 1.0) < 1e-14);
      CHECK(std::abs(std::abs(r.nodes(1, static_cast<Eigen::Index>(q))) - 1.0) < 1e-14);
      CHECK(r.weights(static_cast<Eigen::Index>(q)) == doctest::Approx(0.25));
    }

    Eigen::VectorXd mu(2);
    mu << 3, -1;
    const auto c = tensorize(gauss_hermite_1d(3), 2, mu, Eigen::MatrixXd::Identity(2, 2));
    for (int j = 0; j < 2; ++j) {
      const double centred = quadrature::integrate([&](const Eigen::VectorXd& y) { return y(j) - mu(j); }, c);
      CHECK(std::abs(centred) <= 1e-12);
    }

    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(2, 2);
    s(0, 0) = 4;
    s(1, 1) = 1;
    const auto v = tensorize(gauss_hermite_1d(4), 2, Eigen::VectorXd::Zero(2), s);
    CHECK(quadrature::integrate([](const Eigen::VectorXd& y) { return y(0) * y(0); }, v) ==
          doctest::Approx(4.0).epsilon(1e-10));
  }

  TEST_CASE("integrate") {
    const auto r = tensorize(gauss_hermite_1d(3), 1, Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1));
    CHECK(std::abs(quadrature::integrate([](const Eigen::VectorXd&) { return 1.0; }, r) - 1.0) <= 1e-13);
    CHECK(std::abs(quadrature::integrate([](const Eigen::VectorXd& y) { return y(0) * y(0); }, r) - 1.0) <= 1e-13);
    CHECK(std::abs(quadrature::integrate([](const Eigen::VectorXd& y) { return std::pow(y(0), 4); }, r) - 3.0) <= 1e-12);
    CHECK_THROWS_AS(quadrature::integrate(
                        [](const Eigen::VectorXd& y) {
                          return y(0) > 0 ? std::numeric_limits<double>::infinity() : 0.0;
                        },
                        r),
                    NumericError);
  }

  TEST_CASE("tensor exactness against Gaussian moments") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0), s(0.5, 2.0);
    for (int n = 1; n <= 3; ++n) {
      const int N = 4;
      Eigen::VectorXd mu(n), sd(n);
      for (int j = 0; j < n; ++j) {
        mu(j) = u(rng);
        sd(j) = s(rng);
      }
      const Eigen::MatrixXd sigma = sd.cwiseProduct(sd).asDiagonal();
      const auto r = tensorize(gauss_hermite_1d(N), n, mu, sigma);
      CHECK(r.size() == static_cast<std::size_t>(std::pow(N, n)));
      std::vector<int> beta(static_cast<std::size_t>(n), 0);
      // Every beta with max entry <= 2N-1.
      while (true) {
        const double exact = diagonal_gaussian_moment(beta, mu, sd);
        const double got = quadrature::integrate(
            [&](const Eigen::VectorXd& y) {
              double v = 1.0;
              for (int j = 0; j < n; ++j) v *= std::pow(y(j), beta[static_cast<std::size_t>(j)]);
              return v;
            },
            r);
        CHECK(std::abs(got - exact) <= 1e-10 * std::max(1.0, std::abs(exact)));
        int j = 0;
        while (j < n && ++beta[static_cast<std::size_t>(j)] > 2 * N - 1) beta[static_cast<std::size_t>(j++)] = 0;
        if (j == n) break;
      }
    }
  }

  TEST_CASE("rotated covariance reproduces second moments") {
    Eigen::MatrixXd s(2, 2);
    s << 2.0, 0.7, 0.7, 1.0;
    Eigen::VectorXd mu(2);
    mu << 0.5, -0.25;
    const auto r = tensorize(gauss_hermite_1d(5), 2, mu, s);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        const double c = quadrature::integrate(
            [&](const Eigen::VectorXd& y) { return (y(i) - mu(i)) * (y(j) - mu(j)); }, r);
        CHECK(c == doctest::Approx(s(i, j)).epsilon(1e-12));
      }
  }

  TEST_CASE("node cap") {
    CHECK_THROWS_AS(tensorize(gauss_hermite_1d(10), 3, Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(3, 3), 999),
                    ResourceError);
  }
}
