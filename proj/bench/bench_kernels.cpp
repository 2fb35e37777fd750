// Parallel kernels against their serial references.

#include "homog/gibbs.hpp"
#include "homog/hmm.hpp"
#include "homog/poisson.hpp"
#include "homog/problems.hpp"
#include "homog/quadrature.hpp"
#include "homog/rng.hpp"

#include <benchmark/benchmark.h>

namespace {

struct StiffnessFixture {
  explicit StiffnessFixture(int d)
      : problem(homog::problems::make("bistable")),
        gibbs(homog::gibbs::GibbsMeasure::build(problem.V, problem.lambda)),
        basis(gibbs.basis(d)),
        rule(homog::quadrature::tensorize(homog::quadrature::gauss_hermite_1d(homog::quadrature::default_assembly_nodes(d)), 1,
                                          basis.mu(), basis.sigma())),
        B(homog::poisson::nodal_polynomials(basis, rule)) {}
  homog::FastSlowProblem problem;
  homog::gibbs::GibbsMeasure gibbs;
  homog::hermite::HermiteBasis basis;
  homog::quadrature::QuadratureRule rule;
  Eigen::MatrixXd B;
};

void BM_StiffnessBlocked(benchmark::State& state) {
  const StiffnessFixture f(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(homog::poisson::assemble_stiffness(f.gibbs, f.basis, f.rule, f.B));
}
BENCHMARK(BM_StiffnessBlocked)->Arg(16)->Arg(32);

void BM_StiffnessReference(benchmark::State& state) {
  const StiffnessFixture f(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(homog::poisson::assemble_stiffness_reference(f.gibbs, f.basis, f.rule));
}
BENCHMARK(BM_StiffnessReference)->Arg(16)->Arg(32);

Eigen::MatrixXd series(Eigen::Index rows, Eigen::Index cols, std::uint32_t tag) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      m(i, j) = homog::rng::normal(7, {homog::rng::Stream::test, tag, static_cast<std::uint64_t>(i),
                                       static_cast<std::uint32_t>(j)});
  return m;
}

void BM_LagSums(benchmark::State& state) {
  const auto L = series(state.range(0), 8, 1), R = series(state.range(0), 8, 2);
  for (auto _ : state) benchmark::DoNotOptimize(homog::hmm::paired_lag_sums(L, R, 64));
}
BENCHMARK(BM_LagSums)->Arg(1 << 14)->Arg(1 << 17);

void BM_LagSumsReference(benchmark::State& state) {
  const auto L = series(state.range(0), 8, 1), R = series(state.range(0), 8, 2);
  for (auto _ : state) benchmark::DoNotOptimize(homog::hmm::paired_lag_sums_reference(L, R, 64));
}
BENCHMARK(BM_LagSumsReference)->Arg(1 << 14)->Arg(1 << 17);

}  // namespace

BENCHMARK_MAIN();
