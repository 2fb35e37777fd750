#pragma once

// Experiment drivers behind the CLI subcommands. Each driver returns its rows
// and, when cfg.out is nonempty, writes <out>/<name>.csv plus a JSON sidecar.

#include "homog/coeffs.hpp"
#include "homog/config.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace homog::experiments {

/// Called for every coefficient evaluation; must be thread-safe.
struct Hooks {
  std::function<void(const coeffs::EffectiveCoefficients&)> on_coefficients;
};

struct ConvergenceRow {
  int d;
  double E;
  double wall_seconds;
};
struct ConvergenceResult {
  std::vector<ConvergenceRow> rows;
  std::string csv_path;
};
ConvergenceResult run_convergence(const config::RunConfig& cfg, const Hooks& hooks = {});

struct PointwiseRow {
  int d;
  double e;
};
struct PointwiseResult {
  std::vector<PointwiseRow> rows;
  std::string csv_path;
};
PointwiseResult run_pointwise(const config::RunConfig& cfg, const Hooks& hooks = {});

struct HmmRow {
  int p;
  double E;
  double wall_seconds;
};
struct HmmResult {
  std::vector<HmmRow> rows;
  std::optional<double> slope;
  std::size_t states = 0;
  std::string csv_path;
};
/// Problem "spde" uses the reduced SPDE; any gradient problem uses its
/// spectral model at d_ref.
HmmResult run_hmm_compare(const config::RunConfig& cfg, const Hooks& hooks = {});

struct OracleRow {
  int d;
  double weighted_l2_error;
  double coeff_error;
};
struct OracleResult {
  std::vector<OracleRow> rows;
  std::vector<std::string> warnings;
  double residual = 0.0;
  std::string csv_path;
};
OracleResult run_oracle_check(const config::RunConfig& cfg, const Hooks& hooks = {});

/// Coefficients at x for every degree in cfg.degrees (or d_ref); long format.
std::vector<coeffs::EffectiveCoefficients> run_homogenize(const config::RunConfig& cfg, const Hooks& hooks = {});

/// Homogenized ensemble at the first degree in cfg.degrees (or d_ref).
std::string run_simulate(const config::RunConfig& cfg, const Hooks& hooks = {});

/// SPDE trajectories of (x1, x2): homogenized spectral model, HMM at the
/// first p, and direct simulation of the reduced system.
std::string run_spde(const config::RunConfig& cfg, const Hooks& hooks = {});

/// Model wrapper that reports every evaluation to a hook.
class ObservedModel : public coeffs::EffectiveModel {
 public:
  ObservedModel(const coeffs::EffectiveModel& inner, const Hooks& hooks) : inner_(inner), hooks_(hooks) {}
  int dim() const override { return inner_.dim(); }
  coeffs::EffectiveCoefficients at(const Eigen::VectorXd& x) const override;

 private:
  const coeffs::EffectiveModel& inner_;
  const Hooks& hooks_;
};

}  // namespace homog::experiments
