#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vwlab/functionals.hpp"
#include "vwlab/kernel.hpp"
#include "vwlab/mesh.hpp"

namespace vwlab::solver {

/// Analytic forcing g(r, t) added to the right-hand side.
using Forcing = std::function<double(double r, double t)>;

struct AdaptRule {
  bool enabled = false;
  /// Growth exponent of the shrink rule; negative selects (p - 2)/2.
  double exponent = -1.0;
  double dt_min = 1e-12;
};

struct SolverConfig {
  /// Base step; 0 selects cfl_safety * h.
  double dt0 = 0.0;
  double cfl_safety = 0.5;
  double T_end = 1.0;
  double U_max = 1e6;
  AdaptRule adapt;
  int record_stride = 1;
  /// Accumulate the dissipation integral at every step (energy-balance check).
  bool track_balance = true;
  /// Drop the second-order Taylor term of the start step (harness self-test).
  bool first_order_start = false;
  Forcing forcing;
  /// Levine parameters for the G, G' columns; T <= 0 selects T_end.
  double levine_eta = 0.0;
  double levine_mu = 1.0;
  double levine_T = 0.0;

  /// Resolves dt0 and checks dt0 <= cfl_safety * h.
  double resolve_dt0(const RadialMesh& mesh) const;
};

enum class Status { completed, blewup, dt_underflow, nan_detected };
std::string to_string(Status s);

struct Trajectory {
  Status status = Status::completed;
  std::optional<double> T_obs;
  std::vector<FunctionalRecord> records;
  HistoryBuffer history;
  RadialField u0, v0;
  double u0_hardy_sq = 0.0;
  LevineParams levine;
  std::size_t steps = 0;
  double dt_min_used = 0.0;
  /// max |E(t_n) - E(0) - \int_0^{t_n} E'| over the recorded times.
  double max_balance_defect = 0.0;

  explicit Trajectory(const RadialMesh& mesh) : history(mesh) {}
};

/// Central-difference stepper with pointwise-implicit damping and trapezoid
/// memory quadrature.
class Stepper {
 public:
  Stepper(const RadialMesh& mesh, const ProblemSpec& spec, const kernel::KernelSpec& kernel,
          Forcing forcing = {});

  /// Laplacian(U^n - \int f(t_n - s) U(s) ds) + k |U^n|^{p-2} U^n + g(t_n)
  RadialField rhs(const HistoryBuffer& history, std::size_t n) const;

  /// Taylor start U^1 = U^0 + dt v0 + dt^2/2 (rhs^0 - a v0).
  RadialField first_step(const HistoryBuffer& history, std::span<const double> v0, double dt,
                         bool first_order = false) const;

  /// U^{n+1} from the last two history levels; dt_prev = t_n - t_{n-1}.
  RadialField step(const HistoryBuffer& history, double dt) const;

  /// Second-order velocity at the middle of three levels.
  static RadialField velocity(std::span<const double> prev, std::span<const double> cur,
                              std::span<const double> next, double dt_prev, double dt_next);

  /// Cell-averaged damping coefficient |x|^{-sigma}.
  std::span<const double> damping() const { return damping_; }
  std::span<const double> hardy_weights() const { return hardy_w_; }
  const RadialMesh& mesh() const { return *mesh_; }

 private:
  const RadialMesh* mesh_;
  ProblemSpec spec_;
  kernel::KernelSpec kernel_;
  Forcing forcing_;
  std::vector<double> damping_, hardy_w_, k_values_;
};

/// Integrates to T_end, blow-up (||u||_inf >= U_max) or step underflow.
Trajectory run(const RadialMesh& mesh, std::span<const double> u0, std::span<const double> v0,
               const kernel::KernelSpec& kernel, const ProblemSpec& spec,
               const SolverConfig& config);

/// Exact radial solution with the derivatives the forcing needs.
struct ManufacturedSolution {
  std::function<double(double r, double t)> value, dt, dtt, laplacian;
  /// \int_0^t f(t - s) laplacian(r, s) ds; empty selects quadrature.
  std::function<double(double r, double t, const kernel::KernelSpec&)> memory_laplacian;

  /// (R^2 - r^2) amplitude cos(omega t)
  static ManufacturedSolution separable_quadratic(int n, double R, double amplitude,
                                                  double omega);
};

struct MmsReport {
  int N = 0;
  double dt = 0.0;
  double max_l2_error = 0.0;
  double max_l2_exact = 0.0;
  double relative_error() const {
    return max_l2_exact > 0.0 ? max_l2_error / max_l2_exact : max_l2_error;
  }
  Status status = Status::completed;
};

/// \int_0^t f(t - s) g(s) ds by composite Gauss-Legendre quadrature.
double memory_quadrature(const kernel::KernelSpec& kernel, double t,
                         const std::function<double(double)>& g, int panels = 64);

/// Runs the solver against the manufactured forcing of `exact`; throws if
/// `exact` does not vanish at r = R.
MmsReport run_mms(const ManufacturedSolution& exact, const RadialMesh& mesh,
                  const kernel::KernelSpec& kernel, const ProblemSpec& spec,
                  SolverConfig config);

}  // namespace vwlab::solver
