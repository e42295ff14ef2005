#pragma once

#include <span>
#include <utility>
#include <vector>

#include "vwlab/kernel.hpp"
#include "vwlab/mesh.hpp"

namespace vwlab {

/// Accepted time levels of one trajectory with full snapshots and their
/// face gradients. Times are strictly increasing.
class HistoryBuffer {
 public:
  explicit HistoryBuffer(const RadialMesh& mesh) : mesh_(&mesh) {}

  void push(double t, RadialField u);
  std::size_t size() const { return times_.size(); }
  bool empty() const { return times_.empty(); }
  double time(std::size_t j) const { return times_[j]; }
  std::span<const double> times() const { return times_; }
  const RadialField& snapshot(std::size_t j) const { return snapshots_[j]; }
  std::span<const double> gradients(std::size_t j) const { return gradients_[j]; }
  const RadialMesh& mesh() const { return *mesh_; }

  /// Index of a recorded time; throws if t was never recorded.
  std::size_t index_of(double t) const;

 private:
  const RadialMesh* mesh_;
  std::vector<double> times_;
  std::vector<RadialField> snapshots_;
  std::vector<std::vector<double>> gradients_;
};

/// Trapezoid weights tau_0..tau_n for \int_{t_0}^{t_n} over the recorded times.
std::vector<double> trapezoid_weights(std::span<const double> times, std::size_t n);

/// (f o grad u)(t_n), trapezoid over the history.
double f_circ_grad(const HistoryBuffer& history, const kernel::KernelSpec& kernel,
                   std::size_t n);
/// (f' o grad u)(t_n) with the closed-form f'.
double fprime_circ_grad(const HistoryBuffer& history, const kernel::KernelSpec& kernel,
                        std::size_t n);
/// \int_0^{t_n} ||grad u(t_n) - grad u(s)||^2 ds
double lambda_accumulator(const HistoryBuffer& history, std::size_t n);

struct MemorySums {
  double f_circ = 0.0;
  double fprime_circ = 0.0;
  double lambda = 0.0;
};
/// All three history sums in one pass.
MemorySums memory_sums(const HistoryBuffer& history, const kernel::KernelSpec& kernel,
                       std::size_t n);

/// \int_0^{t_n} f(t_n - s) (u(t_n) - u(s)) ds as a field.
RadialField memory_difference_field(const HistoryBuffer& history,
                                    const kernel::KernelSpec& kernel, std::size_t n);

/// Time integrals accumulated step by step along a trajectory.
struct RunningIntegrals {
  double cum_damping = 0.0;      // \int ||u_s / |x|^{sigma/2}||^2
  double cum_dissipation = 0.0;  // \int E'(s) ds via the dissipation rate
  double hardy_u = 0.0;          // \int ||u / |x|^{sigma/2}||^2
  double hardy_u_us = 0.0;       // \int (u, u_s)_{sigma}
};

struct FunctionalRecord {
  double t = 0.0;
  double E = 0.0;
  double kinetic = 0.0;
  double elastic = 0.0;
  double memory = 0.0;
  double source = 0.0;
  double dissipation_rate = 0.0;
  double cum_damping = 0.0;
  double phi = 0.0;
  double psi = 0.0;
  double M = 0.0;
  double G = 0.0;
  double Gp = 0.0;
  double Lambda = 0.0;
  double I_of_u = 0.0;
  double J_of_u = 0.0;
  double l2_norm = 0.0;
  double grad_norm = 0.0;
  double linf_norm = 0.0;
  double mass = 0.0;  // \int_0^t f
  RunningIntegrals integrals;
};

struct EnergyParts {
  double kinetic = 0.0;
  double elastic = 0.0;
  double memory = 0.0;
  double source = 0.0;
  double E() const { return kinetic + elastic + memory - source; }
};

/// Energy at t from u(t), u_t(t) and the memory functional (f o grad u)(t).
EnergyParts energy_parts(const RadialMesh& mesh, const ProblemSpec& spec,
                         const kernel::KernelSpec& kernel, double t, std::span<const double> u,
                         std::span<const double> ut, double f_circ);

/// Energy with the memory functional taken from the history at index n.
EnergyParts energy(const HistoryBuffer& history, std::size_t n, std::span<const double> ut,
                   const ProblemSpec& spec, const kernel::KernelSpec& kernel);

/// Right-hand side of the energy identity: 1/2 (f' o grad u) - f/2 ||grad u||^2
/// - ||u_t / |x|^{sigma/2}||^2.
double dissipation_rate(const HistoryBuffer& history, std::size_t n, std::span<const double> ut,
                        const ProblemSpec& spec, const kernel::KernelSpec& kernel);

/// (J(w), I(w)) with the residual elasticity ell.
std::pair<double, double> J_and_I(const RadialMesh& mesh, std::span<const double> w,
                                  const ProblemSpec& spec, double ell);

/// (phi, psi) at index n.
std::pair<double, double> phi_psi(const HistoryBuffer& history, std::size_t n,
                                  std::span<const double> ut, const kernel::KernelSpec& kernel);

inline double lyapunov_L(const FunctionalRecord& rec, double eps1, double eps2) {
  return rec.E + eps1 * rec.phi + eps2 * rec.psi;
}

/// ||u_t||^2 + (1 - \int_0^t f) ||grad u||^2 + (f o grad u).
double M_functional(const HistoryBuffer& history, std::size_t n, std::span<const double> ut,
                    const kernel::KernelSpec& kernel);

/// Parameters of the Levine auxiliary functional.
struct LevineParams {
  double eta = 0.0;
  double mu = 1.0;
  double T = 1.0;
  double u0_hardy_sq = 0.0;  // ||u0 / |x|^{sigma/2}||^2
};

struct LevinePoint {
  double t = 0.0;
  double G = 0.0;
  double Gp = 0.0;
};

/// G and G' assembled from records (which carry ||u||^2, phi and the hardy
/// time integrals).
LevinePoint levine_point(const FunctionalRecord& rec, const LevineParams& params);
std::vector<LevinePoint> levine_G(std::span<const FunctionalRecord> records,
                                  const LevineParams& params);

/// Fills every record field except G, Gp from the history at index n.
FunctionalRecord evaluate_record(const HistoryBuffer& history, std::size_t n,
                                 std::span<const double> ut, const ProblemSpec& spec,
                                 const kernel::KernelSpec& kernel, const RunningIntegrals& ints);
/// Same, reusing history sums already computed for index n.
FunctionalRecord evaluate_record(const HistoryBuffer& history, std::size_t n,
                                 std::span<const double> ut, const ProblemSpec& spec,
                                 const kernel::KernelSpec& kernel, const RunningIntegrals& ints,
                                 const MemorySums& sums);

}  // namespace vwlab
