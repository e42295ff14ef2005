#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "vwlab/analysis.hpp"
#include "vwlab/kernel.hpp"
#include "vwlab/mesh.hpp"
#include "vwlab/solver.hpp"
#include "vwlab/wellpot.hpp"

namespace vwlab::config {

/// Schema or value error in an experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ProfileSpec {
  enum class Type { bump, gaussian, cos, minimizer };
  Type type = Type::bump;
  double power = 1.0;   // bump: (1 - (r/R)^2)^power
  double center = 0.0;  // gaussian
  double width = 0.3;   // gaussian
  int mode = 1;         // cos: cos((2 mode - 1) pi r / (2R))
};

struct VelocitySpec {
  enum class Type { zero, proportional, bump };
  Type type = Type::zero;
  double factor = 0.0;     // proportional: v0 = factor u0
  double amplitude = 0.0;  // bump: amplitude (1 - (r/R)^2)
};

struct AutoScale {
  wellpot::WellSet target = wellpot::WellSet::W;
  double margin = 0.5;
};

struct InitialSpec {
  ProfileSpec profile;
  double amplitude = 1.0;
  std::optional<AutoScale> auto_scale;
  VelocitySpec velocity;
};

struct SolverSection {
  solver::SolverConfig config;
  /// dt0 as a multiple of h; 0 leaves config.dt0 in charge.
  double dt_over_h = 0.0;
  std::vector<double> snapshot_times;
};

struct AnalysisSection {
  double t1 = 0.5;
  double eps1 = 0.1;
  double eps2 = 0.1;
  analysis::SearchBox search;
};

struct MmsSection {
  int N = 128;
  double dt_over_h = 0.5;
  double T_end = 1.0;
  double amplitude = 1.0;
  double omega = 2.0;
  bool first_order_start = false;
};

struct ExperimentConfig {
  ProblemSpec problem;
  int N = 128;
  kernel::KernelSpec kernel = kernel::KernelSpec::exponential(0.5, 1.0);
  InitialSpec initial;
  SolverSection solver;
  AnalysisSection analysis;
  wellpot::OptimizerParams well;
  MmsSection mms;
  /// Dotted key -> values; only present for sweeps.
  std::map<std::string, std::vector<nlohmann::json>> sweep_grid;
  bool has_sweep = false;
  std::uint64_t seed = 1;
};

/// Validates against the schema (unknown keys rejected) and the problem's
/// admissibility rules.
ExperimentConfig parse(const nlohmann::json& j);
nlohmann::json load_json(const std::string& path);
ExperimentConfig load(const std::string& path);

/// Keys a sweep grid may vary.
const std::vector<std::string>& sweepable_keys();

/// Copy of `j` with the dotted key set to `value` (objects created as needed).
nlohmann::json with_key(nlohmann::json j, const std::string& dotted, const nlohmann::json& value);

std::string to_string(ProfileSpec::Type t);

}  // namespace vwlab::config
