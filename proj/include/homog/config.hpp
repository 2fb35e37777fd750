#pragma once

// Run configuration: TOML file plus command-line overrides.

#include "homog/problem.hpp"
#include "homog/spde.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace homog::config {

struct InlineProblem {
  std::string name = "inline";
  int m = 1;
  int n = 1;
  std::string V;
  std::vector<std::string> f;
  std::vector<std::vector<std::string>> alpha;
};

struct RunConfig {
  std::string problem = "bistable";
  std::optional<InlineProblem> inline_problem;
  std::optional<double> lambda;
  std::optional<double> eps;

  // integrator
  double dt = 0.01;
  double T = 1.0;
  int replicas = 50;
  std::uint64_t seed = 0;

  std::vector<int> degrees;
  std::optional<int> d_ref;
  std::vector<double> x;  // evaluation point; empty means the problem's x0

  // quadrature
  int nodes = 0;
  int fit_nodes = 0;

  std::vector<int> p_list = {3, 4, 5};

  int spde_modes = 8;
  std::vector<double> spde_q;
  int spde_grid = 0;
  bool spde_b_term = true;
  int spde_degree = 4;

  int oracle_cells = 4096;
  double oracle_width = 8.0;
  std::vector<double> oracle_box;  // [lo, hi] applied to every dimension

  std::string out = "out";
  int threads = 0;

  /// Throws UsageError on inconsistent settings.
  void validate() const;
};

/// Parses a TOML document; unknown keys are rejected.
RunConfig parse_toml(const std::string& text);
RunConfig load_file(const std::string& path);

/// Problem with lambda, eps and x0 overrides applied.
FastSlowProblem resolve_problem(const RunConfig& cfg);
spde::SpdeConfig resolve_spde(const RunConfig& cfg);

/// Fully resolved configuration for output metadata.
nlohmann::json to_json(const RunConfig& cfg);

}  // namespace homog::config
