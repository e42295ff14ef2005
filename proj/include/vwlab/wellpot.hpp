#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vwlab/kernel.hpp"
#include "vwlab/mesh.hpp"

namespace vwlab::wellpot {

struct OptimizerParams {
  int max_iter = 20000;
  /// Relative flatness of the objective over `window` iterations.
  double rel_tol = 1e-8;
  int window = 50;
  int restarts = 5;
  std::uint64_t seed = 1;
};

struct WellReport {
  double d = 0.0;
  double ell = 0.0;
  double B2 = 0.0;
  double Bp = 0.0;
  double B2p2 = 0.0;  // r = 2(p-1)
  double lambda_star_of_minimizer = 0.0;
  /// Minimizer rescaled onto the Nehari manifold, so J(minimizer) = d.
  RadialField minimizer_field;
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
  double small_energy_threshold = 0.0;
  std::vector<double> restart_depths;
  /// (max - min) / mean over the main run and all restarts.
  double restart_spread = 0.0;
};

enum class WellSet { W, V, boundary, neither };
std::string to_string(WellSet s);

struct Classification {
  double E0 = 0.0;
  double I0 = 0.0;
  WellSet set = WellSet::neither;
  bool small_energy_ok = false;
  double theta = 0.0;
};

/// Result of one constrained maximization of \int k |w|^r over ||grad w||^2 = level.
struct ExtremalResult {
  double value = 0.0;
  RadialField field;
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

/// Symmetric tridiagonal stiffness matrix of the gradient norm:
/// grad_sq_norm(w) = w^T S w.
struct Stiffness {
  std::vector<double> diag, lower;  // lower[i] couples i and i-1, lower[0] unused
  explicit Stiffness(const RadialMesh& mesh);
  std::vector<double> apply(std::span<const double> w) const;
  std::vector<double> solve(std::span<const double> rhs) const;
};

/// Scaling that puts w on the Nehari manifold: (ell A / B)^{1/(p-2)}.
/// Throws when \int k |w|^p = 0.
double lambda_star(const RadialMesh& mesh, std::span<const double> w, const ProblemSpec& spec,
                   double ell);

/// max_{lambda > 0} J(lambda w) = (1/2 - 1/p) ell A (ell A / B)^{2/(p-2)}.
double mountain_pass_value(const RadialMesh& mesh, std::span<const double> w,
                           const ProblemSpec& spec, double ell);

/// Normalized Sobolev-gradient ascent with backtracking on \int k |w|^r
/// subject to ||grad w||^2 = level.
ExtremalResult maximize_on_sphere(const RadialMesh& mesh, std::span<const double> k_values,
                                  double r, double level, RadialField init,
                                  const OptimizerParams& params);

/// Optimal constant in ||w||_r^r <= B_r ||grad w||^r, estimated by nonlinear
/// inverse iteration (a lower bound of the continuum constant).
double estimate_B_r(const RadialMesh& mesh, double r, const OptimizerParams& params = {});
ExtremalResult estimate_B_r_full(const RadialMesh& mesh, double r,
                                 const OptimizerParams& params = {});

WellReport well_depth(const RadialMesh& mesh, const ProblemSpec& spec,
                      const kernel::KernelSpec& kernel, const OptimizerParams& params = {});

/// E(0) from the energy at t = 0 (no memory terms) and I(u0).
Classification classify(const RadialMesh& mesh, std::span<const double> u0,
                        std::span<const double> v0, const ProblemSpec& spec,
                        const kernel::KernelSpec& kernel, const WellReport& well);

struct ScaleResult {
  double amplitude = 0.0;
  Classification classification;
};

/// Finds an amplitude c so that (c profile, v0) lands in W or V with the
/// requested energy margin. Throws std::runtime_error when infeasible.
ScaleResult scale_into(WellSet target, std::span<const double> profile,
                       std::span<const double> v0, const RadialMesh& mesh,
                       const ProblemSpec& spec, const kernel::KernelSpec& kernel,
                       const WellReport& well, double margin);

}  // namespace vwlab::wellpot
