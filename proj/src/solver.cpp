#include "vwlab/solver.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace vwlab::solver {

double SolverConfig::resolve_dt0(const RadialMesh& mesh) const {
  if (!(cfl_safety > 0.0) || cfl_safety > 1.0)
    throw std::invalid_argument("solver.cfl_safety must lie in (0, 1]");
  const double limit = cfl_safety * mesh.h();
  if (dt0 == 0.0) return limit;
  if (!(dt0 > 0.0)) throw std::invalid_argument("solver.dt0 must be positive");
  if (dt0 > limit * (1.0 + 1e-12))
    throw std::invalid_argument("solver.dt0 = " + std::to_string(dt0) +
                                " exceeds cfl_safety * h = " + std::to_string(limit));
  return dt0;
}

std::string to_string(Status s) {
  switch (s) {
    case Status::completed:
      return "completed";
    case Status::blewup:
      return "blewup";
    case Status::dt_underflow:
      return "dt_underflow";
    case Status::nan_detected:
      return "nan_detected";
  }
  return "unknown";
}

Stepper::Stepper(const RadialMesh& mesh, const ProblemSpec& spec,
                 const kernel::KernelSpec& kernel, Forcing forcing)
    : mesh_(&mesh), spec_(spec), kernel_(kernel), forcing_(std::move(forcing)) {
  hardy_w_ = mesh.hardy_weights(spec.sigma);
  const auto vol = mesh.cell_volumes();
  damping_.resize(mesh.size());
  for (int i = 0; i < mesh.size(); ++i) damping_[i] = hardy_w_[i] / vol[i];
  k_values_ = sample_k(mesh, spec.k);
}

RadialField Stepper::rhs(const HistoryBuffer& history, std::size_t n) const {
  const auto& mesh = *mesh_;
  const int N = mesh.size();
  const double tn = history.time(n);

  // Laplacian is linear, so fold the memory quadrature into one gradient array.
  const auto gn = history.gradients(n);
  std::vector<double> g(gn.begin(), gn.end());
  if (n > 0) {
    const auto tau = trapezoid_weights(history.times(), n);
    for (std::size_t j = 0; j <= n; ++j) {
      const double w = tau[j] * kernel::eval_f(kernel_, tn - history.time(j));
      const auto gj = history.gradients(j);
      for (int i = 0; i <= N; ++i) g[i] -= w * gj[i];
    }
  }
  RadialField out(N);
  laplacian_from_gradients(mesh, g, out);

  const auto& u = history.snapshot(n);
  const auto r = mesh.nodes();
  for (int i = 0; i < N; ++i) {
    out[i] += k_values_[i] * std::pow(std::abs(u[i]), spec_.p - 2.0) * u[i];
    if (forcing_) out[i] += forcing_(r[i], tn);
  }
  return out;
}

RadialField Stepper::first_step(const HistoryBuffer& history, std::span<const double> v0,
                                double dt, bool first_order) const {
  if (history.size() != 1) throw std::logic_error("first_step needs exactly the initial level");
  check_size(*mesh_, v0);
  const auto& u0 = history.snapshot(0);
  RadialField u1(u0.size());
  if (first_order) {
    for (std::size_t i = 0; i < u0.size(); ++i) u1[i] = u0[i] + dt * v0[i];
    return u1;
  }
  const auto acc = rhs(history, 0);
  for (std::size_t i = 0; i < u0.size(); ++i)
    u1[i] = u0[i] + dt * v0[i] + 0.5 * dt * dt * (acc[i] - damping_[i] * v0[i]);
  return u1;
}

RadialField Stepper::step(const HistoryBuffer& history, double dt) const {
  if (history.size() < 2) throw std::logic_error("step needs two history levels");
  if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be positive");
  const std::size_t n = history.size() - 1;
  const auto& cur = history.snapshot(n);
  const auto& prev = history.snapshot(n - 1);
  const double dt_prev = history.time(n) - history.time(n - 1);
  const double mean = 0.5 * (dt + dt_prev);
  const double ratio = dt / dt_prev;
  const auto acc = rhs(history, n);

  RadialField next(cur.size());
  for (std::size_t i = 0; i < cur.size(); ++i) {
    const double half_damp = 0.5 * dt * damping_[i];
    next[i] = (cur[i] + ratio * (cur[i] - prev[i]) + half_damp * prev[i] + dt * mean * acc[i]) /
              (1.0 + half_damp);
  }
  return next;
}

RadialField Stepper::velocity(std::span<const double> prev, std::span<const double> cur,
                              std::span<const double> next, double dt_prev, double dt_next) {
  const double denom = dt_prev * dt_next * (dt_prev + dt_next);
  const double wf = dt_prev * dt_prev / denom;
  const double wb = dt_next * dt_next / denom;
  RadialField v(cur.size());
  for (std::size_t i = 0; i < cur.size(); ++i)
    v[i] = wf * (next[i] - cur[i]) + wb * (cur[i] - prev[i]);
  return v;
}

namespace {

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// Pointwise quantities feeding the running time integrals.
struct LevelSample {
  double hardy_ut = 0.0;
  double hardy_u = 0.0;
  double hardy_u_ut = 0.0;
  double dissipation = 0.0;
};

class Integrator {
 public:
  Integrator(const RadialMesh& mesh, const ProblemSpec& spec, const kernel::KernelSpec& kernel,
             const SolverConfig& config, Trajectory& traj)
      : mesh_(mesh),
        spec_(spec),
        kernel_(kernel),
        config_(config),
        traj_(traj),
        stepper_(mesh, spec, kernel, config.forcing) {}

  void run(std::span<const double> u0, std::span<const double> v0) {
    check_size(mesh_, u0);
    check_size(mesh_, v0);
    const double dt0 = config_.resolve_dt0(mesh_);
    if (!(config_.T_end > 0.0)) throw std::invalid_argument("solver.T_end must be positive");
    if (config_.record_stride < 1) throw std::invalid_argument("solver.record_stride must be >= 1");
    base_dt_ = dt0;
    growth_exponent_ = config_.adapt.exponent >= 0.0 ? config_.adapt.exponent
                                                     : 0.5 * (spec_.p - 2.0);

    auto& history = traj_.history;
    traj_.u0.assign(u0.begin(), u0.end());
    traj_.v0.assign(v0.begin(), v0.end());
    traj_.u0_hardy_sq = weighted_inner(stepper_.hardy_weights(), u0, u0);
    traj_.levine = {config_.levine_eta, config_.levine_mu,
                    config_.levine_T > 0.0 ? config_.levine_T : config_.T_end, traj_.u0_hardy_sq};
    traj_.dt_min_used = dt0;

    history.push(0.0, RadialField(u0.begin(), u0.end()));
    if (!all_finite(u0) || !all_finite(v0)) {
      traj_.status = Status::nan_detected;
      return;
    }
    prev_sample_ = sample(0, v0, true);
    emit(0, v0, prev_sample_, true);

    double dt = next_dt(history.snapshot(0));
    if (dt < config_.adapt.dt_min) {
      traj_.status = Status::dt_underflow;
      return;
    }
    auto u1 = stepper_.first_step(history, v0, dt, config_.first_order_start);
    ++traj_.steps;
    if (!all_finite(u1)) {
      traj_.status = Status::nan_detected;
      return;
    }
    if (crossed(0, u1, dt)) return;
    history.push(dt, std::move(u1));

    for (std::size_t n = 1;; ++n) {
      const double tn = history.time(n);
      double dt_next = next_dt(history.snapshot(n));
      if (dt_next < config_.adapt.dt_min) {
        traj_.status = Status::dt_underflow;
        return;
      }
      const double remaining = config_.T_end - tn;
      if (remaining > 0.05 * dt_next && remaining < dt_next) dt_next = remaining;

      auto next = stepper_.step(history, dt_next);
      ++traj_.steps;
      if (!all_finite(next)) {
        traj_.status = Status::nan_detected;
        return;
      }
      const double dt_prev = tn - history.time(n - 1);
      const auto ut = Stepper::velocity(history.snapshot(n - 1), history.snapshot(n), next,
                                        dt_prev, dt_next);
      const bool finishing = tn >= config_.T_end - 0.05 * dt_next;
      const bool crossing = linf_norm(next) >= config_.U_max;
      const bool want_record =
          finishing || crossing || n % static_cast<std::size_t>(config_.record_stride) == 0;
      advance(n, ut, want_record);
      if (crossing) {
        crossed(n, std::move(next), dt_next);
        return;
      }
      if (finishing) {
        traj_.status = Status::completed;
        return;
      }
      history.push(tn + dt_next, std::move(next));
    }
  }

 private:
  double next_dt(std::span<const double> u) {
    double dt = base_dt_;
    if (config_.adapt.enabled)
      dt = std::min(dt, base_dt_ / (1.0 + std::pow(linf_norm(u), growth_exponent_)));
    traj_.dt_min_used = std::min(traj_.dt_min_used, dt);
    return dt;
  }

  LevelSample sample(std::size_t n, std::span<const double> ut, bool with_dissipation) {
    const auto& u = traj_.history.snapshot(n);
    const auto hw = stepper_.hardy_weights();
    LevelSample s;
    s.hardy_ut = weighted_inner(hw, ut, ut);
    s.hardy_u = weighted_inner(hw, u, u);
    s.hardy_u_ut = weighted_inner(hw, u, ut);
    if (with_dissipation) {
      sums_ = memory_sums(traj_.history, kernel_, n);
      have_sums_ = true;
      const double grad_sq = grad_sq_norm_from_gradients(mesh_, traj_.history.gradients(n));
      s.dissipation = 0.5 * sums_.fprime_circ -
                      0.5 * kernel::eval_f(kernel_, traj_.history.time(n)) * grad_sq - s.hardy_ut;
    } else {
      have_sums_ = false;
    }
    return s;
  }

  // Accumulates the running integrals from level n-1 to n and records n.
  void advance(std::size_t n, std::span<const double> ut, bool want_record) {
    const auto s = sample(n, ut, config_.track_balance || want_record);
    const double dt = traj_.history.time(n) - traj_.history.time(n - 1);
    auto& I = ints_;
    I.cum_damping += 0.5 * dt * (prev_sample_.hardy_ut + s.hardy_ut);
    I.hardy_u += 0.5 * dt * (prev_sample_.hardy_u + s.hardy_u);
    I.hardy_u_us += 0.5 * dt * (prev_sample_.hardy_u_ut + s.hardy_u_ut);
    if (config_.track_balance) I.cum_dissipation += 0.5 * dt * (prev_sample_.dissipation + s.dissipation);
    prev_sample_ = s;
    if (want_record) emit(n, ut, s, false);
  }

  void emit(std::size_t n, std::span<const double> ut, const LevelSample&, bool first) {
    const auto& history = traj_.history;
    if (!have_sums_) sums_ = memory_sums(history, kernel_, n);
    auto rec = evaluate_record(history, n, ut, spec_, kernel_, ints_, sums_);
    const auto pt = levine_point(rec, traj_.levine);
    rec.G = pt.G;
    rec.Gp = pt.Gp;
    if (first) E0_ = rec.E;
    if (config_.track_balance)
      traj_.max_balance_defect =
          std::max(traj_.max_balance_defect, std::abs(rec.E - E0_ - ints_.cum_dissipation));
    traj_.records.push_back(rec);
  }

  // Handles ||next||_inf >= U_max after level n; returns true when crossed.
  bool crossed(std::size_t n, RadialField next, double dt) {
    const double top = linf_norm(next);
    if (top < config_.U_max) return false;
    auto& history = traj_.history;
    const double low = linf_norm(history.snapshot(n));
    const double tn = history.time(n);
    const double frac = top > low ? (config_.U_max - low) / (top - low) : 1.0;
    traj_.T_obs = tn + std::clamp(frac, 0.0, 1.0) * dt;
    traj_.status = Status::blewup;

    // Second-order one-sided velocity; U^{n+2} is never computed.
    RadialField ut(next.size());
    const auto& cur = history.snapshot(n);
    if (n >= 1) {
      const auto& prev = history.snapshot(n - 1);
      const double a = tn - history.time(n - 1), b = dt;
      const double w2 = (2.0 * b + a) / (b * (a + b)), w1 = -(a + b) / (a * b),
                   w0 = b / (a * (a + b));
      for (std::size_t i = 0; i < ut.size(); ++i) ut[i] = w2 * next[i] + w1 * cur[i] + w0 * prev[i];
    } else {
      for (std::size_t i = 0; i < ut.size(); ++i) ut[i] = (next[i] - cur[i]) / dt;
    }
    history.push(tn + dt, std::move(next));
    advance(n + 1, ut, true);
    return true;
  }

  const RadialMesh& mesh_;
  const ProblemSpec& spec_;
  const kernel::KernelSpec& kernel_;
  const SolverConfig& config_;
  Trajectory& traj_;
  Stepper stepper_;
  double base_dt_ = 0.0;
  double growth_exponent_ = 0.5;
  double E0_ = 0.0;
  RunningIntegrals ints_;
  LevelSample prev_sample_;
  MemorySums sums_;
  bool have_sums_ = false;
};

}  // namespace

Trajectory run(const RadialMesh& mesh, std::span<const double> u0, std::span<const double> v0,
               const kernel::KernelSpec& kernel, const ProblemSpec& spec,
               const SolverConfig& config) {
  Trajectory traj(mesh);
  Integrator(mesh, spec, kernel, config, traj).run(u0, v0);
  return traj;
}

ManufacturedSolution ManufacturedSolution::separable_quadratic(int n, double R, double amplitude,
                                                               double omega) {
  ManufacturedSolution ms;
  ms.value = [=](double r, double t) { return amplitude * (R * R - r * r) * std::cos(omega * t); };
  ms.dt = [=](double r, double t) {
    return -amplitude * omega * (R * R - r * r) * std::sin(omega * t);
  };
  ms.dtt = [=](double r, double t) {
    return -amplitude * omega * omega * (R * R - r * r) * std::cos(omega * t);
  };
  ms.laplacian = [=](double, double t) { return -2.0 * n * amplitude * std::cos(omega * t); };
  ms.memory_laplacian = [=](double, double t, const kernel::KernelSpec& k) {
    const double scale = -2.0 * n * amplitude;
    if (k.family == kernel::Family::exponential) {
      const double lam = k.rate;
      return scale * k.b *
             (lam * std::cos(omega * t) + omega * std::sin(omega * t) - lam * std::exp(-lam * t)) /
             (lam * lam + omega * omega);
    }
    return scale * memory_quadrature(k, t, [=](double s) { return std::cos(omega * s); });
  };
  return ms;
}

double memory_quadrature(const kernel::KernelSpec& kernel, double t,
                         const std::function<double(double)>& g, int panels) {
  if (t <= 0.0) return 0.0;
  static constexpr std::array<double, 5> nodes = {-0.9061798459386640, -0.5384693101056831, 0.0,
                                                  0.5384693101056831, 0.9061798459386640};
  static constexpr std::array<double, 5> weights = {0.2369268850561891, 0.4786286704993665,
                                                    0.5688888888888889, 0.4786286704993665,
                                                    0.2369268850561891};
  const double width = t / panels;
  double s = 0.0;
  for (int k = 0; k < panels; ++k) {
    const double mid = (k + 0.5) * width;
    for (std::size_t q = 0; q < nodes.size(); ++q) {
      const double x = mid + 0.5 * width * nodes[q];
      s += weights[q] * kernel::eval_f(kernel, t - x) * g(x);
    }
  }
  return 0.5 * width * s;
}

MmsReport run_mms(const ManufacturedSolution& exact, const RadialMesh& mesh,
                  const kernel::KernelSpec& kernel, const ProblemSpec& spec,
                  SolverConfig config) {
  const double R = mesh.radius();
  double scale = 0.0;
  for (double r : mesh.nodes()) scale = std::max(scale, std::abs(exact.value(r, 0.0)));
  for (double t : {0.0, 0.5 * config.T_end, config.T_end})
    if (std::abs(exact.value(R, t)) > 1e-12 * std::max(1.0, scale))
      throw std::invalid_argument("manufactured solution does not vanish at r = R");

  const double p = spec.p;
  auto memory = exact.memory_laplacian;
  if (!memory)
    memory = [&exact](double r, double t, const kernel::KernelSpec& k) {
      return memory_quadrature(k, t, [&](double s) { return exact.laplacian(r, s); });
    };
  // The damping term uses the scheme's cell-averaged |x|^{-sigma}: that is the
  // cell average of a u_t to second order, while the point value is not near r = 0.
  const Stepper stepper(mesh, spec, kernel);
  std::vector<double> damping(stepper.damping().begin(), stepper.damping().end());
  const double h = mesh.h();
  config.forcing = [&, memory, damping, h](double r, double t) {
    const double u = exact.value(r, t);
    const auto cell = std::min<std::size_t>(static_cast<std::size_t>(r / h), damping.size() - 1);
    return exact.dtt(r, t) - exact.laplacian(r, t) + memory(r, t, kernel) +
           damping[cell] * exact.dt(r, t) -
           spec.k(r, R) * std::pow(std::abs(u), p - 2.0) * u;
  };
  config.track_balance = false;
  config.record_stride = 1 << 30;
  config.adapt.enabled = false;

  const auto r = mesh.nodes();
  RadialField u0(mesh.size()), v0(mesh.size());
  for (int i = 0; i < mesh.size(); ++i) {
    u0[i] = exact.value(r[i], 0.0);
    v0[i] = exact.dt(r[i], 0.0);
  }
  const auto traj = run(mesh, u0, v0, kernel, spec, config);

  MmsReport rep;
  rep.N = mesh.size();
  rep.dt = config.resolve_dt0(mesh);
  rep.status = traj.status;
  RadialField diff(mesh.size()), ex(mesh.size());
  for (std::size_t j = 0; j < traj.history.size(); ++j) {
    const double t = traj.history.time(j);
    const auto& u = traj.history.snapshot(j);
    for (int i = 0; i < mesh.size(); ++i) {
      ex[i] = exact.value(r[i], t);
      diff[i] = u[i] - ex[i];
    }
    rep.max_l2_error = std::max(rep.max_l2_error, std::sqrt(l2_sq_norm(mesh, diff)));
    rep.max_l2_exact = std::max(rep.max_l2_exact, std::sqrt(l2_sq_norm(mesh, ex)));
  }
  return rep;
}

}  // namespace vwlab::solver
