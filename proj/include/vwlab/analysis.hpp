#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vwlab/functionals.hpp"
#include "vwlab/kernel.hpp"
#include "vwlab/mesh.hpp"
#include "vwlab/solver.hpp"
#include "vwlab/wellpot.hpp"

namespace vwlab::analysis {

struct LinearFit {
  double intercept = 0.0;
  double slope = 0.0;
  double r2 = 0.0;
  std::size_t count = 0;
};

/// Ordinary least squares y = intercept + slope x. R^2 = 1 for an exact line
/// (including a constant y).
LinearFit least_squares(std::span<const double> x, std::span<const double> y);

enum class DecayBranch { exponential, polynomial, improved };
std::string to_string(DecayBranch b);

struct EnvelopePoint {
  double t = 0.0;
  double E = 0.0;
  double envelope = 0.0;
  double ratio = 0.0;  // E / envelope
};

/// Envelope test of one decay shape: C fitted on the first half-window,
/// extrapolated to the second.
struct EnvelopeCheck {
  double fitted_slope = 0.0;    // slope of log E against the shape's abscissa
  double fit_r2 = 0.0;
  double envelope_slope = 0.0;  // slope used by the envelope
  double envelope_constant_C = 0.0;
  double worst_ratio = 0.0;     // max over the second half of E / (C env)
  bool extrapolation_pass = false;
  std::vector<EnvelopePoint> series;
};

struct DecayReport {
  double t1 = 0.0;
  double q = 1.0;
  double xi0 = 0.0;
  DecayBranch branch = DecayBranch::exponential;
  bool fit_ok = false;
  std::string flag;  // reason when the fit is refused or the series does not decay
  bool decaying = false;
  double fitted_slope = 0.0;
  double fit_r2 = 0.0;
  double envelope_slope = 0.0;
  double envelope_constant_C = 0.0;
  bool extrapolation_pass = false;
  bool monotone_pass = false;
  EnvelopeCheck primary;
  std::optional<EnvelopeCheck> improved;
};

/// Extrapolation factor of the half-window envelope test.
inline constexpr double kEnvelopeFactor = 1.1;

/// Fits log E on [t1, t_end] against the shape selected by the kernel's q.
/// `slack` is the per-step tolerance of the monotonicity check.
DecayReport fit_decay(std::span<const double> times, std::span<const double> energies,
                      const kernel::KernelSpec& kernel, double t1, double slack = 0.0);
/// Same with the decay exponent q and xi0 given directly.
DecayReport fit_decay(std::span<const double> times, std::span<const double> energies, double q,
                      double xi0, double t1, double slack = 0.0);
/// Monotonicity slack is twice the trajectory's balance defect.
DecayReport fit_decay(const solver::Trajectory& traj, const kernel::KernelSpec& kernel, double t1);

/// (1 / ((p-2) K B)) ln(1 + ell^{p-1} M0^{2-p}), M0 = ||u1||^2 + ||grad u0||^2.
double blowup_lower_bound(double M0, double p, double K, double B2p2, double ell);
double blowup_lower_bound(const RadialMesh& mesh, std::span<const double> u0,
                          std::span<const double> v0, const ProblemSpec& spec,
                          const kernel::KernelSpec& kernel, double B2p2);

enum class EnergyCase { negative_E0, zero_E0, positive_E0 };
std::string to_string(EnergyCase c);

struct SearchBox {
  double mu_min = 1e-4;
  double mu_max = 1e4;
  int grid = 41;
  int refine_iters = 80;
};

/// Scalars of the initial data entering the upper bound.
struct UpperBoundData {
  double u0_sq = 0.0;        // ||u0||^2
  double u0_hardy_sq = 0.0;  // ||u0 / |x|^{sigma/2}||^2
  double u0u1 = 0.0;         // (u0, u1)
  double p = 3.0;
  double E0 = 0.0;
  double d = 0.0;
  double gamma_est = 0.0;    // a priori gamma at t = 0
};

struct UpperBound {
  bool feasible = false;
  std::string reason;
  EnergyCase energy_case = EnergyCase::positive_E0;
  double T_upper = kernel::kInfinity;
  double eta = 0.0;
  double mu = 0.0;
  double eta_max = 0.0;  // open upper end of the admissible eta range
};

/// (2||u0||^2 + 2 eta mu^2) / ((p-2)(u0,u1) + eta mu - 2||u0|.|^{-sigma/2}||^2)
double upper_bound_ratio(const UpperBoundData& data, double eta, double mu);

/// Minimizes the ratio over the admissible (eta, mu) of the data's energy case.
UpperBound blowup_upper_bound(const UpperBoundData& data, const SearchBox& box = {});

struct GammaEstimate {
  double value = 0.0;
  double t_at_min = 0.0;
  bool positive = false;
};

/// min_t ((p-2)/(2p)) ((1 - \int f) ||grad u||^2 + f o grad u) - d over the records.
GammaEstimate estimate_gamma(std::span<const FunctionalRecord> records, double p, double d);

struct ConvexityPoint {
  double t = 0.0;
  double G = 0.0;
  double Gp = 0.0;
  double Gpp = 0.0;
  double combination = 0.0;  // G G'' - ((p+2)/4) G'^2
};

struct ConvexityResult {
  double min_value = 0.0;
  double t_at_min = 0.0;
  double scale = 0.0;  // max G |G''|
  std::vector<ConvexityPoint> series;
};

/// G'' by centered differences of G' over the (possibly non-uniform) times.
/// Throws with fewer than three points.
ConvexityResult convexity_check(std::span<const LevinePoint> points, double p);

/// Moves G, G' columns computed with `from` onto the parameters `to`.
std::vector<LevinePoint> rebase_levine(std::span<const LevinePoint> points,
                                       const LevineParams& from, const LevineParams& to);

/// Everything the blow-up report needs besides the time series.
struct BlowupInputs {
  double T_obs = 0.0;
  double E0 = 0.0;
  double I0 = 0.0;
  double d = 0.0;
  double ell = 0.5;
  double p = 3.0;
  double K = 1.0;
  double B2p2 = 0.0;
  double M0 = 0.0;
  double u0_sq = 0.0;
  double u0_hardy_sq = 0.0;
  double u0u1 = 0.0;
  double grad_u0_sq = 0.0;
  double dt0 = 0.0;
  LevineParams levine;  // parameters the G, G' columns were computed with
};

struct BlowupReport {
  double T_obs = 0.0;
  double T_lower = 0.0;
  std::optional<double> T_upper;
  std::optional<double> in_proof_bound;  // 4 G(0) / ((p-2) G'(0)) with T = T_obs
  std::string upper_note;
  double eta_star = 0.0;
  double mu_star = 0.0;
  double theta = 0.0;
  EnergyCase energy_case = EnergyCase::positive_E0;
  double gamma_est = 0.0;
  GammaEstimate gamma_run;
  double mass = 0.0;
  double mass_bound = 0.0;
  bool mass_condition_ok = false;
  double convexity_min = 0.0;
  double convexity_scale = 0.0;
  double convexity_tol = 0.0;
  bool convexity_ok = false;
  bool lower_ok = false;
  bool upper_ok = false;
  ConvexityResult convexity;
};

/// Relative slack of the lower-bound verdict T_obs >= T_lower (1 - slack).
inline constexpr double kLowerBoundSlack = 0.02;

BlowupReport blowup_report(std::span<const FunctionalRecord> records,
                           std::span<const LevinePoint> levine, const BlowupInputs& in,
                           const kernel::KernelSpec& kernel, const SearchBox& box = {});
/// Assembles the inputs from a blown-up trajectory; throws for other statuses.
BlowupReport blowup_report(const solver::Trajectory& traj, const RadialMesh& mesh,
                           const ProblemSpec& spec, const kernel::KernelSpec& kernel,
                           const wellpot::WellReport& well, double dt0,
                           const SearchBox& box = {});
BlowupInputs blowup_inputs(const solver::Trajectory& traj, const RadialMesh& mesh,
                           const ProblemSpec& spec, const kernel::KernelSpec& kernel,
                           const wellpot::WellReport& well, double dt0);

}  // namespace vwlab::analysis
