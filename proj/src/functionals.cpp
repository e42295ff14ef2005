#include "vwlab/functionals.hpp"

#include <cmath>
#include <stdexcept>

namespace vwlab {

void HistoryBuffer::push(double t, RadialField u) {
  if (!times_.empty() && !(t > times_.back()))
    throw std::invalid_argument("history times must be strictly increasing");
  gradients_.push_back(face_gradients(*mesh_, u));
  times_.push_back(t);
  snapshots_.push_back(std::move(u));
}

std::size_t HistoryBuffer::index_of(double t) const {
  for (std::size_t j = times_.size(); j-- > 0;)
    if (times_[j] == t) return j;
  throw std::invalid_argument("time " + std::to_string(t) + " is not recorded in the history");
}

std::vector<double> trapezoid_weights(std::span<const double> times, std::size_t n) {
  std::vector<double> tau(n + 1, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const double half = 0.5 * (times[j + 1] - times[j]);
    tau[j] += half;
    tau[j + 1] += half;
  }
  return tau;
}

MemorySums memory_sums(const HistoryBuffer& history, const kernel::KernelSpec& kernel,
                       std::size_t n) {
  if (n >= history.size()) throw std::invalid_argument("memory_sums: index not recorded");
  MemorySums out;
  if (n == 0) return out;
  const auto& mesh = history.mesh();
  const auto tau = trapezoid_weights(history.times(), n);
  const auto gn = history.gradients(n);
  const auto areas = mesh.face_areas();
  const auto fw = mesh.face_weights();
  const double tn = history.time(n);
  for (std::size_t j = 0; j < n; ++j) {
    const auto gj = history.gradients(j);
    double d = 0.0;
    for (int i = 1; i <= mesh.size(); ++i) {
      const double diff = gn[i] - gj[i];
      d += areas[i] * fw[i] * diff * diff;
    }
    const double lag = tn - history.time(j);
    out.f_circ += tau[j] * kernel::eval_f(kernel, lag) * d;
    out.fprime_circ += tau[j] * kernel::eval_fprime(kernel, lag) * d;
    out.lambda += tau[j] * d;
  }
  return out;
}

double f_circ_grad(const HistoryBuffer& history, const kernel::KernelSpec& kernel,
                   std::size_t n) {
  return memory_sums(history, kernel, n).f_circ;
}

double fprime_circ_grad(const HistoryBuffer& history, const kernel::KernelSpec& kernel,
                        std::size_t n) {
  return memory_sums(history, kernel, n).fprime_circ;
}

double lambda_accumulator(const HistoryBuffer& history, std::size_t n) {
  return memory_sums(history, kernel::KernelSpec{}, n).lambda;
}

RadialField memory_difference_field(const HistoryBuffer& history,
                                    const kernel::KernelSpec& kernel, std::size_t n) {
  const auto& un = history.snapshot(n);
  RadialField out(un.size(), 0.0);
  if (n == 0) return out;
  const auto tau = trapezoid_weights(history.times(), n);
  const double tn = history.time(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double w = tau[j] * kernel::eval_f(kernel, tn - history.time(j));
    const auto& uj = history.snapshot(j);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += w * (un[i] - uj[i]);
  }
  return out;
}

EnergyParts energy_parts(const RadialMesh& mesh, const ProblemSpec& spec,
                         const kernel::KernelSpec& kernel, double t, std::span<const double> u,
                         std::span<const double> ut, double f_circ) {
  EnergyParts e;
  e.kinetic = 0.5 * l2_sq_norm(mesh, ut);
  e.elastic = 0.5 * (1.0 - kernel::cumulative_mass(kernel, t)) * grad_sq_norm(mesh, u);
  e.memory = 0.5 * f_circ;
  e.source = weighted_lp_norm(mesh, u, spec.k, spec.p) / spec.p;
  return e;
}

EnergyParts energy(const HistoryBuffer& history, std::size_t n, std::span<const double> ut,
                   const ProblemSpec& spec, const kernel::KernelSpec& kernel) {
  return energy_parts(history.mesh(), spec, kernel, history.time(n), history.snapshot(n), ut,
                      f_circ_grad(history, kernel, n));
}

double dissipation_rate(const HistoryBuffer& history, std::size_t n, std::span<const double> ut,
                        const ProblemSpec& spec, const kernel::KernelSpec& kernel) {
  const auto& mesh = history.mesh();
  const double t = history.time(n);
  return 0.5 * fprime_circ_grad(history, kernel, n) -
         0.5 * kernel::eval_f(kernel, t) * grad_sq_norm_from_gradients(mesh, history.gradients(n)) -
         hardy_norm_sq(mesh, ut, spec.sigma);
}

std::pair<double, double> J_and_I(const RadialMesh& mesh, std::span<const double> w,
                                  const ProblemSpec& spec, double ell) {
  const double A = grad_sq_norm(mesh, w);
  const double B = weighted_lp_norm(mesh, w, spec.k, spec.p);
  return {0.5 * ell * A - B / spec.p, ell * A - B};
}

std::pair<double, double> phi_psi(const HistoryBuffer& history, std::size_t n,
                                  std::span<const double> ut, const kernel::KernelSpec& kernel) {
  const auto& mesh = history.mesh();
  const double phi = inner(mesh, ut, history.snapshot(n));
  if (n == 0) return {phi, 0.0};
  const auto mem = memory_difference_field(history, kernel, n);
  return {phi, -inner(mesh, ut, mem)};
}

double M_functional(const HistoryBuffer& history, std::size_t n, std::span<const double> ut,
                    const kernel::KernelSpec& kernel) {
  const auto& mesh = history.mesh();
  return l2_sq_norm(mesh, ut) +
         (1.0 - kernel::cumulative_mass(kernel, history.time(n))) *
             grad_sq_norm_from_gradients(mesh, history.gradients(n)) +
         f_circ_grad(history, kernel, n);
}

LevinePoint levine_point(const FunctionalRecord& rec, const LevineParams& params) {
  const double shift = rec.t + params.mu;
  LevinePoint pt;
  pt.t = rec.t;
  pt.G = rec.l2_norm * rec.l2_norm + rec.integrals.hardy_u + (params.T - rec.t) * params.u0_hardy_sq +
         params.eta * shift * shift;
  pt.Gp = 2.0 * rec.phi + 2.0 * rec.integrals.hardy_u_us + 2.0 * params.eta * shift;
  return pt;
}

std::vector<LevinePoint> levine_G(std::span<const FunctionalRecord> records,
                                  const LevineParams& params) {
  if (!(params.eta >= 0.0) || !(params.mu > 0.0))
    throw std::invalid_argument("levine_G: need eta >= 0 and mu > 0");
  if (!records.empty() && params.T < records.back().t)
    throw std::invalid_argument("levine_G: T must not precede the last recorded time");
  std::vector<LevinePoint> out;
  out.reserve(records.size());
  for (const auto& rec : records) out.push_back(levine_point(rec, params));
  return out;
}

FunctionalRecord evaluate_record(const HistoryBuffer& history, std::size_t n,
                                 std::span<const double> ut, const ProblemSpec& spec,
                                 const kernel::KernelSpec& kernel, const RunningIntegrals& ints) {
  return evaluate_record(history, n, ut, spec, kernel, ints, memory_sums(history, kernel, n));
}

FunctionalRecord evaluate_record(const HistoryBuffer& history, std::size_t n,
                                 std::span<const double> ut, const ProblemSpec& spec,
                                 const kernel::KernelSpec& kernel, const RunningIntegrals& ints,
                                 const MemorySums& sums) {
  const auto& mesh = history.mesh();
  const auto& u = history.snapshot(n);
  const double t = history.time(n);
  const double grad_sq = grad_sq_norm_from_gradients(mesh, history.gradients(n));
  const double ell = kernel::residual_elasticity(kernel);

  FunctionalRecord rec;
  rec.t = t;
  rec.mass = kernel::cumulative_mass(kernel, t);
  const auto parts = energy_parts(mesh, spec, kernel, t, u, ut, sums.f_circ);
  rec.kinetic = parts.kinetic;
  rec.elastic = parts.elastic;
  rec.memory = parts.memory;
  rec.source = parts.source;
  rec.E = parts.E();
  rec.dissipation_rate = 0.5 * sums.fprime_circ - 0.5 * kernel::eval_f(kernel, t) * grad_sq -
                         hardy_norm_sq(mesh, ut, spec.sigma);
  rec.cum_damping = ints.cum_damping;
  const auto [phi, psi] = phi_psi(history, n, ut, kernel);
  rec.phi = phi;
  rec.psi = psi;
  rec.M = 2.0 * (parts.kinetic + parts.elastic + parts.memory);
  rec.Lambda = sums.lambda;
  const double B = parts.source * spec.p;
  rec.J_of_u = 0.5 * ell * grad_sq - B / spec.p;
  rec.I_of_u = ell * grad_sq - B;
  rec.l2_norm = std::sqrt(l2_sq_norm(mesh, u));
  rec.grad_norm = std::sqrt(grad_sq);
  rec.linf_norm = linf_norm(u);
  rec.integrals = ints;
  return rec;
}

}  // namespace vwlab
