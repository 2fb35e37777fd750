#include "homog/experiments.hpp"

#include "homog/errors.hpp"
#include "homog/hmm.hpp"
#include "homog/oracle.hpp"
#include "homog/report.hpp"
#include "homog/rng.hpp"
#include "homog/sde.hpp"
#include "homog/spde.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <memory>

namespace homog::experiments {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string output_path(const config::RunConfig& cfg, const std::string& name) {
  if (cfg.out.empty()) return {};
  return (std::filesystem::path(cfg.out) / (name + ".csv")).string();
}

std::string problem_label(const config::RunConfig& cfg) {
  return cfg.inline_problem ? cfg.inline_problem->name : cfg.problem;
}

struct Models {
  FastSlowProblem problem;
  gibbs::GibbsMeasure gibbs;
  poisson::AssemblyOptions assembly;

  std::unique_ptr<coeffs::SpectralModel> at_degree(int d) const {
    auto solver = std::make_shared<const poisson::CellSolver>(gibbs, d, assembly);
    return std::make_unique<coeffs::SpectralModel>(problem, std::move(solver));
  }
};

Models build_models(const config::RunConfig& cfg) {
  FastSlowProblem p = config::resolve_problem(cfg);
  gibbs::FitOptions fit;
  fit.fit_nodes = cfg.fit_nodes;
  poisson::AssemblyOptions assembly;
  assembly.nodes_per_dim = cfg.nodes;
  gibbs::GibbsMeasure g = gibbs::GibbsMeasure::build(p.V, p.lambda, fit);
  return Models{std::move(p), std::move(g), assembly};
}

std::vector<int> degrees_or_ref(const config::RunConfig& cfg, const FastSlowProblem& p) {
  if (!cfg.degrees.empty()) return cfg.degrees;
  return {p.d_ref};
}

void require_degrees(const config::RunConfig& cfg) {
  if (cfg.degrees.empty()) throw UsageError("degree list is empty");
}

sde::IntegratorConfig integrator(const config::RunConfig& cfg, int replicas) {
  sde::IntegratorConfig ic;
  ic.dt = cfg.dt;
  ic.T = cfg.T;
  ic.replicas = replicas;
  ic.seed = cfg.seed;
  ic.validate();
  return ic;
}

}  // namespace

coeffs::EffectiveCoefficients ObservedModel::at(const Eigen::VectorXd& x) const {
  coeffs::EffectiveCoefficients c = inner_.at(x);
  if (hooks_.on_coefficients) hooks_.on_coefficients(c);
  return c;
}

ConvergenceResult run_convergence(const config::RunConfig& cfg, const Hooks& hooks) {
  cfg.validate();
  require_degrees(cfg);
  const Models models = build_models(cfg);
  const FastSlowProblem& p = models.problem;
  if (p.d_ref <= *std::max_element(cfg.degrees.begin(), cfg.degrees.end()))
    throw UsageError("d_ref must exceed every degree in the list");
  const Eigen::VectorXd x0 = Eigen::Map<const Eigen::VectorXd>(p.x0.data(), p.m);
  const sde::IntegratorConfig ic = integrator(cfg, cfg.replicas);

  const auto ref_model = models.at_degree(p.d_ref);
  const sde::TrajectoryEnsemble ref = sde::simulate_homogenized(ObservedModel(*ref_model, hooks), x0, ic);

  ConvergenceResult result;
  result.csv_path = output_path(cfg, "convergence_" + problem_label(cfg));
  std::optional<report::CsvWriter> csv;
  if (!result.csv_path.empty()) csv.emplace(result.csv_path, std::vector<std::string>{"d", "E", "wall_seconds"});
  for (int d : cfg.degrees) {
    const auto t0 = Clock::now();
    const auto model = models.at_degree(d);
    const sde::TrajectoryEnsemble ens = sde::simulate_homogenized(ObservedModel(*model, hooks), x0, ic);
    const ConvergenceRow row{d, sde::error_E(ref, ens), seconds_since(t0)};
    result.rows.push_back(row);
    if (csv) csv->row({std::int64_t{row.d}, row.E, row.wall_seconds});
  }
  if (csv) report::write_sidecar(result.csv_path, config::to_json(cfg), {{"lambda", p.lambda}, {"d_ref", p.d_ref}});
  return result;
}

PointwiseResult run_pointwise(const config::RunConfig& cfg, const Hooks& hooks) {
  cfg.validate();
  require_degrees(cfg);
  const Models models = build_models(cfg);
  const FastSlowProblem& p = models.problem;
  const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(p.x0.data(), p.m);
  const auto ref_model = models.at_degree(p.d_ref);
  const coeffs::EffectiveCoefficients ref = ObservedModel(*ref_model, hooks).at(x);
  if (ref.F.norm() == 0.0 || ref.A.norm() == 0.0)
    throw UsageError("pointwise error: reference coefficients vanish at this state");

  PointwiseResult result;
  result.csv_path = output_path(cfg, "pointwise_" + problem_label(cfg));
  std::optional<report::CsvWriter> csv;
  if (!result.csv_path.empty()) csv.emplace(result.csv_path, std::vector<std::string>{"d", "e"});
  for (int d : cfg.degrees) {
    const auto model = models.at_degree(d);
    const coeffs::EffectiveCoefficients c = ObservedModel(*model, hooks).at(x);
    const PointwiseRow row{d, sde::error_pointwise(ref.F, ref.A, c.F, c.A)};
    result.rows.push_back(row);
    if (csv) csv->row({std::int64_t{row.d}, row.e});
  }
  if (csv) report::write_sidecar(result.csv_path, config::to_json(cfg), {{"lambda", p.lambda}, {"d_ref", p.d_ref}});
  return result;
}

HmmResult run_hmm_compare(const config::RunConfig& cfg, const Hooks& hooks) {
  cfg.validate();
  if (cfg.p_list.empty()) throw UsageError("HMM p list is empty");
  std::unique_ptr<spde::SpectralSpde> spde;
  std::unique_ptr<coeffs::EffectiveModel> model;
  std::unique_ptr<hmm::MicroProblem> micro;
  Eigen::VectorXd x0;
  std::optional<Models> models;
  if (cfg.problem == "spde" && !cfg.inline_problem) {
    spde = std::make_unique<spde::SpectralSpde>(config::resolve_spde(cfg));
    model = std::make_unique<spde::SpdeModel>(*spde, cfg.spde_degree);
    micro = std::make_unique<spde::SpdeMicro>(*spde);
    x0 = Eigen::Map<const Eigen::VectorXd>(spde->config().x0.data(), 2);
  } else {
    models.emplace(build_models(cfg));
    model = models->at_degree(models->problem.d_ref);
    micro = std::make_unique<hmm::GradientMicro>(models->problem);
    x0 = Eigen::Map<const Eigen::VectorXd>(models->problem.x0.data(), models->problem.m);
  }
  const ObservedModel observed(*model, hooks);

  // One spectral trajectory fixes the macro states; coefficients are compared there.
  const sde::IntegratorConfig ic = integrator(cfg, 1);
  const sde::TrajectoryEnsemble traj = sde::simulate_homogenized(observed, x0, ic);
  std::vector<Eigen::VectorXd> F_sp;
  std::vector<Eigen::MatrixXd> A_sp;
  std::vector<Eigen::VectorXd> states;
  for (int n = 0; n < traj.steps; ++n) {
    states.emplace_back(traj.state(0, n));
    const coeffs::EffectiveCoefficients c = observed.at(states.back());
    F_sp.push_back(c.F);
    A_sp.push_back(c.A);
  }

  HmmResult result;
  result.states = states.size();
  result.csv_path = output_path(cfg, "hmm_compare_" + problem_label(cfg));
  for (int p : cfg.p_list) {
    const auto t0 = Clock::now();
    hmm::HmmConfig hc;
    hc.p = p;
    hc.seed = cfg.seed;
    std::vector<Eigen::VectorXd> F_h;
    std::vector<Eigen::MatrixXd> A_h;
    for (std::size_t n = 0; n < states.size(); ++n) {
      const hmm::Estimate est = hmm::estimate_at(*micro, states[n], hc, static_cast<std::uint32_t>(n));
      F_h.push_back(est.F);
      A_h.push_back(est.A);
    }
    result.rows.push_back({p, hmm::error_Ep(F_h, A_h, F_sp, A_sp, cfg.dt, cfg.dt * traj.steps), seconds_since(t0)});
  }
  if (result.rows.size() >= 2) {
    std::vector<int> ps;
    std::vector<double> Es;
    for (const HmmRow& r : result.rows) {
      ps.push_back(r.p);
      Es.push_back(r.E);
    }
    result.slope = hmm::log2_slope(ps, Es);
  }
  if (!result.csv_path.empty()) {
    report::CsvWriter csv(result.csv_path, {"p", "E_p", "slope_fit", "wall_seconds"});
    for (const HmmRow& r : result.rows)
      csv.row({std::int64_t{r.p}, r.E, result.slope ? report::Cell(*result.slope) : report::Cell(), r.wall_seconds});
    nlohmann::json extra = {{"states", result.states}};
    if (spde) extra["spde_q"] = spde->config().q;
    report::write_sidecar(result.csv_path, config::to_json(cfg), extra);
  }
  return result;
}

OracleResult run_oracle_check(const config::RunConfig& cfg, const Hooks& hooks) {
  cfg.validate();
  require_degrees(cfg);
  const Models models = build_models(cfg);
  const FastSlowProblem& p = models.problem;
  if (p.n > 2) throw UsageError("oracle check supports one or two fast dimensions");
  const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(p.x0.data(), p.m);
  oracle::Box box;
  if (!cfg.oracle_box.empty()) {
    box.lo.assign(static_cast<std::size_t>(p.n), cfg.oracle_box[0]);
    box.hi.assign(static_cast<std::size_t>(p.n), cfg.oracle_box[1]);
  } else {
    box = oracle::default_box(models.gibbs, cfg.oracle_width);
  }
  const std::vector<int> cells(static_cast<std::size_t>(p.n), cfg.oracle_cells);
  const oracle::GridCoefficients grid = oracle::grid_coefficients(p, x, box, cells);

  OracleResult result;
  for (const auto& s : grid.solutions) {
    result.warnings.insert(result.warnings.end(), s.warnings.begin(), s.warnings.end());
    result.residual = std::max(result.residual, s.residual);
  }
  result.csv_path = output_path(cfg, "oracle_check_" + problem_label(cfg));
  std::optional<report::CsvWriter> csv;
  if (!result.csv_path.empty())
    csv.emplace(result.csv_path, std::vector<std::string>{"d", "weighted_l2_error", "coeff_error"});
  const auto df = poisson::slow_gradients(p.f, p.m);
  for (int d : cfg.degrees) {
    const auto model = models.at_degree(d);
    const poisson::PoissonSolution sol = model->solver().solve_at(p.f, df, x);
    const coeffs::EffectiveCoefficients c = ObservedModel(*model, hooks).at(x);
    double l2 = 0.0;
    for (int i = 0; i < p.m; ++i)
      l2 += oracle::weighted_l2_error(grid.solutions[static_cast<std::size_t>(i)], model->solver(), sol.psi.col(i));
    const OracleRow row{d, l2, oracle::coefficient_error(grid.F, grid.D, c.F, c.D)};
    result.rows.push_back(row);
    if (csv) csv->row({std::int64_t{row.d}, row.weighted_l2_error, row.coeff_error});
  }
  if (csv)
    report::write_sidecar(result.csv_path, config::to_json(cfg),
                          {{"box_lo", box.lo}, {"box_hi", box.hi}, {"warnings", result.warnings}});
  return result;
}

std::vector<coeffs::EffectiveCoefficients> run_homogenize(const config::RunConfig& cfg, const Hooks& hooks) {
  cfg.validate();
  std::vector<coeffs::EffectiveCoefficients> out;
  std::vector<int> degrees;
  if (cfg.problem == "spde" && !cfg.inline_problem) {
    const spde::SpectralSpde s(config::resolve_spde(cfg));
    const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(s.config().x0.data(), 2);
    degrees = cfg.degrees.empty() ? std::vector<int>{cfg.spde_degree} : cfg.degrees;
    for (int d : degrees) {
      const spde::SpdeModel model(s, d);
      out.push_back(ObservedModel(model, hooks).at(x));
    }
  } else {
    const Models models = build_models(cfg);
    const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(models.problem.x0.data(), models.problem.m);
    degrees = degrees_or_ref(cfg, models.problem);
    for (int d : degrees) {
      const auto model = models.at_degree(d);
      out.push_back(ObservedModel(*model, hooks).at(x));
    }
  }
  const std::string path = output_path(cfg, "homogenize_" + problem_label(cfg));
  if (!path.empty()) {
    report::CsvWriter csv(path, {"d", "quantity", "i", "j", "value"});
    for (std::size_t k = 0; k < out.size(); ++k) {
      const auto& c = out[k];
      const std::int64_t d = degrees[k];
      for (Eigen::Index i = 0; i < c.x.size(); ++i) csv.row({d, std::string("x"), std::int64_t{i}, report::Cell(), c.x(i)});
      for (Eigen::Index i = 0; i < c.F.size(); ++i) csv.row({d, std::string("F"), std::int64_t{i}, report::Cell(), c.F(i)});
      for (Eigen::Index i = 0; i < c.D.rows(); ++i)
        for (Eigen::Index j = 0; j < c.D.cols(); ++j)
          csv.row({d, std::string("D"), std::int64_t{i}, std::int64_t{j}, c.D(i, j)});
      for (Eigen::Index i = 0; i < c.A.rows(); ++i)
        for (Eigen::Index j = 0; j < c.A.cols(); ++j)
          csv.row({d, std::string("A"), std::int64_t{i}, std::int64_t{j}, c.A(i, j)});
    }
    report::write_sidecar(path, config::to_json(cfg));
  }
  return out;
}

std::string run_simulate(const config::RunConfig& cfg, const Hooks& hooks) {
  cfg.validate();
  const Models models = build_models(cfg);
  const FastSlowProblem& p = models.problem;
  const int d = degrees_or_ref(cfg, p).front();
  const auto model = models.at_degree(d);
  const Eigen::VectorXd x0 = Eigen::Map<const Eigen::VectorXd>(p.x0.data(), p.m);
  const sde::TrajectoryEnsemble ens = sde::simulate_homogenized(ObservedModel(*model, hooks), x0, integrator(cfg, cfg.replicas));
  const std::string path = output_path(cfg, "simulate_" + problem_label(cfg));
  if (path.empty()) return path;
  std::vector<std::string> header = {"replica", "step", "t"};
  for (int i = 0; i < p.m; ++i) header.push_back("x" + std::to_string(i));
  report::CsvWriter csv(path, header);
  for (int r = 0; r < ens.replicas; ++r)
    for (int n = 0; n <= ens.steps; ++n) {
      std::vector<report::Cell> row = {std::int64_t{r}, std::int64_t{n}, n * ens.dt};
      const auto s = ens.state(r, n);
      for (int i = 0; i < p.m; ++i) row.emplace_back(s(i));
      csv.row(row);
    }
  report::write_sidecar(path, config::to_json(cfg), {{"degree", d}});
  return path;
}

std::string run_spde(const config::RunConfig& cfg, const Hooks& hooks) {
  cfg.validate();
  const spde::SpectralSpde s(config::resolve_spde(cfg));
  const spde::SpdeModel model(s, cfg.spde_degree);
  const ObservedModel observed(model, hooks);
  const spde::SpdeMicro micro(s);
  const Eigen::VectorXd x0 = Eigen::Map<const Eigen::VectorXd>(s.config().x0.data(), 2);
  const sde::IntegratorConfig ic = integrator(cfg, 1);
  const int steps = ic.steps();

  const sde::TrajectoryEnsemble spectral = sde::simulate_homogenized(observed, x0, ic);

  // HMM macro stepping with the same Brownian increments as the spectral run.
  std::vector<Eigen::VectorXd> hmm_path = {x0};
  if (!cfg.p_list.empty()) {
    hmm::HmmConfig hc;
    hc.p = cfg.p_list.front();
    hc.seed = cfg.seed;
    Eigen::VectorXd x = x0;
    for (int n = 0; n < steps; ++n) {
      const hmm::Estimate est = hmm::estimate_at(micro, x, hc, static_cast<std::uint32_t>(n));
      x = sde::euler_maruyama_step(x, est.F, est.A, cfg.dt, sde::brownian_increment(cfg.seed, 0, n, 2, cfg.dt),
                                   static_cast<std::size_t>(n));
      hmm_path.push_back(x);
    }
  }

  // Direct simulation of the reduced system from a stationary fast state.
  const double eps = s.config().eps;
  double max_rate = 0.0;
  for (int k = 0; k < s.modes(); ++k) max_rate = std::max(max_rate, s.rate(k));
  const int sub = static_cast<int>(std::ceil(cfg.dt * 10.0 * max_rate / (eps * eps)));
  const double micro_dt = cfg.dt / sub;
  Eigen::VectorXd y0(s.modes());
  for (int k = 0; k < s.modes(); ++k)
    y0(k) = std::sqrt(s.variance(k)) * rng::normal(cfg.seed, {rng::Stream::initial, 0, 0, static_cast<std::uint32_t>(k)});
  const spde::ReducedTrajectory direct = spde::simulate_reduced(s, x0, y0, micro_dt, steps * cfg.dt, cfg.seed);

  const std::string path = output_path(cfg, "spde_trajectories");
  if (path.empty()) return path;
  report::CsvWriter csv(path, {"t", "x1", "x2", "method"});
  for (int n = 0; n <= steps; ++n) {
    const auto v = spectral.state(0, n);
    csv.row({n * cfg.dt, v(0), v(1), std::string("spectral")});
  }
  for (std::size_t n = 0; n < hmm_path.size() && !cfg.p_list.empty(); ++n)
    csv.row({static_cast<double>(n) * cfg.dt, hmm_path[n](0), hmm_path[n](1),
             std::string("hmm_p") + std::to_string(cfg.p_list.front())});
  for (int n = 0; n <= steps; ++n) {
    const std::size_t k = std::min(direct.slow.size() - 1, static_cast<std::size_t>(n) * static_cast<std::size_t>(sub));
    csv.row({n * cfg.dt, direct.slow[k](0), direct.slow[k](1), std::string("direct")});
  }
  report::write_sidecar(path, config::to_json(cfg), {{"spde_q", s.config().q}, {"micro_dt", micro_dt}});
  return path;
}

}  // namespace homog::experiments
