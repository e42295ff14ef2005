#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "vwlab/analysis.hpp"
#include "vwlab/config.hpp"
#include "vwlab/solver.hpp"
#include "vwlab/wellpot.hpp"

namespace vwlab::experiment {

enum ExitCode : int { kOk = 0, kConfigError = 1, kNumericalFailure = 2, kOrderFailure = 3 };

RadialField make_profile(const config::ProfileSpec& spec, const RadialMesh& mesh,
                         const wellpot::WellReport& well);
RadialField make_velocity(const config::VelocitySpec& spec, const RadialMesh& mesh,
                          std::span<const double> u0);

/// Mesh, well, initial data and solver settings of one configured run.
struct PreparedRun {
  RadialMesh mesh;
  kernel::KernelCertificate certificate;
  wellpot::WellReport well;
  RadialField u0, v0;
  double amplitude = 1.0;
  wellpot::Classification classification;
  solver::SolverConfig solver;
  double dt0 = 0.0;
};

/// certify -> well_depth -> initial data (auto-scaled if requested) -> classify.
/// Throws config::ConfigError for infeasible requests.
PreparedRun prepare(const config::ExperimentConfig& cfg);

nlohmann::json to_json(const wellpot::WellReport& w);
nlohmann::json to_json(const wellpot::Classification& c);
nlohmann::json to_json(const kernel::KernelCertificate& c);
nlohmann::json to_json(const analysis::DecayReport& r);
nlohmann::json to_json(const analysis::BlowupReport& r);

nlohmann::json run_summary(const config::ExperimentConfig& cfg, const PreparedRun& run,
                           const solver::Trajectory& traj);

/// Decay report from records (as read back from CSV) and the run summary.
analysis::DecayReport decay_report(const config::ExperimentConfig& cfg,
                                   std::span<const FunctionalRecord> records,
                                   const nlohmann::json& summary);
/// Blow-up report from records and the run summary; throws if the run did not blow up.
analysis::BlowupReport blowup_report(const config::ExperimentConfig& cfg,
                                     std::span<const FunctionalRecord> records,
                                     const nlohmann::json& summary);

/// Writes decay_report.json + decay_envelope.csv; returns the file names.
std::vector<std::string> write_decay_report(const std::filesystem::path& dir,
                                            const analysis::DecayReport& r);
/// Writes blowup_report.json + convexity.csv; returns the file names.
std::vector<std::string> write_blowup_report(const std::filesystem::path& dir,
                                             const analysis::BlowupReport& r);

struct SimulateResult {
  int exit_code = kOk;
  solver::Status status = solver::Status::completed;
  std::optional<double> T_obs;
  std::optional<double> fitted_slope;
  std::string initial_set;
  std::string error;
};

/// Runs one configured simulation into out_dir (config, records, summary,
/// report, snapshots, manifest).
SimulateResult simulate(const config::ExperimentConfig& cfg, const nlohmann::json& raw,
                        const std::filesystem::path& out_dir);

struct MmsStudy {
  solver::MmsReport coarse, fine;
  double order = 0.0;
};
MmsStudy mms_study(const config::ExperimentConfig& cfg);

struct SweepResult {
  int exit_code = kOk;
  std::size_t runs = 0;
  std::size_t succeeded = 0;
};
/// One sub-directory per grid point, runs in parallel, aggregate sweep.csv.
SweepResult sweep(const config::ExperimentConfig& cfg, const nlohmann::json& raw,
                  const std::filesystem::path& out_dir, unsigned threads);

}  // namespace vwlab::experiment
