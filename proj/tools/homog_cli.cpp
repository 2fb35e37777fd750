// Command-line front end: one subcommand per experiment driver.

#include "homog/config.hpp"
#include "homog/errors.hpp"
#include "homog/experiments.hpp"
#include "homog/problems.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

struct Flags {
  std::string config_path;
  std::optional<std::string> problem;
  std::vector<int> degrees;
  std::optional<int> d_ref;
  std::optional<double> lambda;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> threads;
  std::vector<double> x;
  std::vector<int> p_list;
  std::optional<double> T;
};

void add_common(CLI::App* app, Flags& f) {
  app->add_option("--config", f.config_path, "TOML configuration file");
  app->add_option("--problem", f.problem, "registry problem name");
  app->add_option("-d,--degree", f.degrees, "polynomial degree(s)");
  app->add_option("--dref", f.d_ref, "reference degree");
  app->add_option("--lambda", f.lambda, "basis scaling parameter");
  app->add_option("--seed", f.seed, "random seed");
  app->add_option("--out", f.out, "output directory");
  app->add_option("--threads", f.threads, "OpenMP threads (0: runtime default)");
  app->add_option("--x", f.x, "slow state");
  app->add_option("--p", f.p_list, "HMM precision parameters");
  app->add_option("--T", f.T, "final time");
}

homog::config::RunConfig resolve(const Flags& f) {
  homog::config::RunConfig c;
  if (!f.config_path.empty()) c = homog::config::load_file(f.config_path);
  if (f.problem) {
    c.problem = *f.problem;
    c.inline_problem.reset();
  }
  if (!f.degrees.empty()) c.degrees = f.degrees;
  if (f.d_ref) c.d_ref = *f.d_ref;
  if (f.lambda) c.lambda = *f.lambda;
  if (f.seed) c.seed = *f.seed;
  if (f.out) c.out = *f.out;
  if (f.threads) c.threads = *f.threads;
  if (!f.x.empty()) c.x = f.x;
  if (!f.p_list.empty()) c.p_list = f.p_list;
  if (f.T) c.T = *f.T;
  c.validate();
  if (c.threads > 0) omp_set_num_threads(c.threads);
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral homogenization of fast/slow SDEs"};
  app.require_subcommand(1);
  Flags flags;
  struct Sub {
    const char* name;
    const char* help;
  };
  const std::vector<Sub> subs = {
      {"homogenize", "effective drift and diffusion at a slow state"},
      {"simulate", "ensemble of the homogenized SDE"},
      {"convergence", "trajectory error E(d) against d_ref"},
      {"pointwise", "relative coefficient error e(d, x)"},
      {"hmm-compare", "HMM error E_p along a spectral trajectory"},
      {"spde", "SPDE trajectories: spectral, HMM and direct"},
      {"oracle-check", "spectral solution against the finite-difference oracle"},
      {"list-problems", "registered problems"},
  };
  std::vector<CLI::App*> apps;
  for (const Sub& s : subs) {
    CLI::App* a = app.add_subcommand(s.name, s.help);
    if (std::string(s.name) != "list-problems") add_common(a, flags);
    apps.push_back(a);
  }
  CLI11_PARSE(app, argc, argv);

  try {
    if (apps[7]->parsed()) {
      for (const auto& n : homog::problems::names()) std::printf("%-16s %s\n", n.c_str(), homog::problems::describe(n).c_str());
      return 0;
    }
    const homog::config::RunConfig cfg = resolve(flags);
    if (apps[0]->parsed()) {
      for (const auto& c : homog::experiments::run_homogenize(cfg)) {
        std::cout << "x = " << c.x.transpose() << "\nF = " << c.F.transpose() << "\nD =\n" << c.D << "\nA =\n"
                  << c.A << "\n";
      }
    } else if (apps[1]->parsed()) {
      const std::string path = homog::experiments::run_simulate(cfg);
      if (!path.empty()) std::printf("wrote %s\n", path.c_str());
    } else if (apps[2]->parsed()) {
      for (const auto& r : homog::experiments::run_convergence(cfg).rows)
        std::printf("d=%d E=%.6e (%.2fs)\n", r.d, r.E, r.wall_seconds);
    } else if (apps[3]->parsed()) {
      for (const auto& r : homog::experiments::run_pointwise(cfg).rows) std::printf("d=%d e=%.6e\n", r.d, r.e);
    } else if (apps[4]->parsed()) {
      const auto res = homog::experiments::run_hmm_compare(cfg);
      for (const auto& r : res.rows) std::printf("p=%d E_p=%.6e (%.1fs)\n", r.p, r.E, r.wall_seconds);
      if (res.slope) std::printf("slope=%.4f\n", *res.slope);
    } else if (apps[5]->parsed()) {
      const std::string path = homog::experiments::run_spde(cfg);
      if (!path.empty()) std::printf("wrote %s\n", path.c_str());
    } else if (apps[6]->parsed()) {
      const auto res = homog::experiments::run_oracle_check(cfg);
      for (const auto& w : res.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
      for (const auto& r : res.rows)
        std::printf("d=%d weighted_l2=%.3e coeff=%.3e\n", r.d, r.weighted_l2_error, r.coeff_error);
    }
  } catch (const homog::UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
