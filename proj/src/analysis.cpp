#include "vwlab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace vwlab::analysis {

namespace {

// Envelope test for one shape: log E against x(t), env = E(t1) exp(slope x).
EnvelopeCheck envelope_check(std::span<const double> t, std::span<const double> E,
                             std::span<const double> x, double t_mid,
                             std::optional<double> fixed_slope) {
  EnvelopeCheck out;
  std::vector<double> logE(E.size());
  for (std::size_t i = 0; i < E.size(); ++i) logE[i] = std::log(E[i]);
  const auto full = least_squares(x, logE);
  out.fitted_slope = full.slope;
  out.fit_r2 = full.r2;

  std::size_t half = 0;
  while (half < t.size() && t[half] <= t_mid) ++half;
  half = std::max<std::size_t>(half, 2);
  if (fixed_slope) {
    out.envelope_slope = *fixed_slope;
  } else {
    out.envelope_slope = least_squares(x.first(half), std::span<const double>(logE).first(half)).slope;
  }

  out.series.resize(t.size());
  out.envelope_constant_C = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double env = E[0] * std::exp(out.envelope_slope * x[i]);
    out.series[i] = {t[i], E[i], env, E[i] / env};
    if (i < half) out.envelope_constant_C = std::max(out.envelope_constant_C, E[i] / env);
  }
  out.worst_ratio = 0.0;
  for (std::size_t i = half; i < t.size(); ++i)
    out.worst_ratio =
        std::max(out.worst_ratio, out.series[i].ratio / out.envelope_constant_C);
  out.extrapolation_pass = out.worst_ratio <= kEnvelopeFactor;
  return out;
}

}  // namespace

LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("least_squares: size mismatch");
  if (x.size() < 2) throw std::invalid_argument("least_squares: need at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("least_squares: abscissae are all equal");
  LinearFit fit;
  fit.count = x.size();
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - fit.intercept - fit.slope * x[i];
    sse += r * r;
  }
  // A constant y is fitted exactly.
  fit.r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  return fit;
}

std::string to_string(DecayBranch b) {
  switch (b) {
    case DecayBranch::exponential: return "exponential";
    case DecayBranch::polynomial: return "polynomial";
    case DecayBranch::improved: return "improved";
  }
  return "unknown";
}

std::string to_string(EnergyCase c) {
  switch (c) {
    case EnergyCase::negative_E0: return "negative_E0";
    case EnergyCase::zero_E0: return "zero_E0";
    case EnergyCase::positive_E0: return "positive_E0";
  }
  return "unknown";
}

DecayReport fit_decay(std::span<const double> times, std::span<const double> energies, double q,
                      double xi0, double t1, double slack) {
  if (times.size() != energies.size())
    throw std::invalid_argument("fit_decay: times and energies differ in length");
  if (!(q >= 1.0)) throw std::invalid_argument("fit_decay: q must be >= 1");
  if (!(xi0 > 0.0)) throw std::invalid_argument("fit_decay: xi0 must be positive");
  if (!(t1 >= 0.0)) throw std::invalid_argument("fit_decay: t1 must be non-negative");

  DecayReport rep;
  rep.t1 = t1;
  rep.q = q;
  rep.xi0 = xi0;
  if (q == 1.0) rep.branch = DecayBranch::exponential;
  else if (kernel::check_improved_rate_condition(q)) rep.branch = DecayBranch::improved;
  else rep.branch = DecayBranch::polynomial;

  rep.monotone_pass = true;
  for (std::size_t i = 1; i < energies.size(); ++i)
    if (energies[i] > energies[i - 1] + slack) rep.monotone_pass = false;

  std::vector<double> t, E;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < t1) continue;
    t.push_back(times[i]);
    E.push_back(energies[i]);
  }
  if (t.size() < 4) {
    rep.flag = "fewer than four records in [t1, t_end]";
    return rep;
  }
  for (double e : E) {
    if (!(e > 0.0)) {
      rep.flag = "energy non-positive in the fit window";
      return rep;
    }
  }
  const double t_mid = 0.5 * (t.front() + t.back());

  std::vector<double> x(t.size());
  if (q == 1.0) {
    for (std::size_t i = 0; i < t.size(); ++i) x[i] = xi0 * (t[i] - t1);
    rep.primary = envelope_check(t, E, x, t_mid, std::nullopt);
  } else {
    const double a = std::pow(xi0, 2.0 * q - 1.0);
    for (std::size_t i = 0; i < t.size(); ++i) x[i] = std::log1p(a * (t[i] - t1));
    rep.primary = envelope_check(t, E, x, t_mid, -1.0 / (2.0 * q - 2.0));
    if (rep.branch == DecayBranch::improved) {
      const double b = std::pow(xi0, q);
      for (std::size_t i = 0; i < t.size(); ++i) x[i] = std::log1p(b * (t[i] - t1));
      rep.improved = envelope_check(t, E, x, t_mid, -1.0 / (q - 1.0));
    }
  }
  rep.fit_ok = true;
  rep.fitted_slope = rep.primary.fitted_slope;
  rep.fit_r2 = rep.primary.fit_r2;
  rep.envelope_slope = rep.primary.envelope_slope;
  rep.envelope_constant_C = rep.primary.envelope_constant_C;
  rep.extrapolation_pass = rep.primary.extrapolation_pass;
  rep.decaying = rep.fitted_slope < 0.0 && E.back() < E.front();
  if (!rep.decaying) rep.flag = "non-decaying";
  return rep;
}

DecayReport fit_decay(std::span<const double> times, std::span<const double> energies,
                      const kernel::KernelSpec& kernel, double t1, double slack) {
  return fit_decay(times, energies, kernel::decay_exponent(kernel),
                   kernel::decay_coefficient(kernel), t1, slack);
}

DecayReport fit_decay(const solver::Trajectory& traj, const kernel::KernelSpec& kernel,
                      double t1) {
  if (traj.status != solver::Status::completed)
    throw std::invalid_argument("fit_decay: trajectory did not complete (status " +
                                solver::to_string(traj.status) + ")");
  std::vector<double> t, E;
  t.reserve(traj.records.size());
  E.reserve(traj.records.size());
  for (const auto& r : traj.records) {
    t.push_back(r.t);
    E.push_back(r.E);
  }
  return fit_decay(t, E, kernel, t1, 2.0 * traj.max_balance_defect);
}

double blowup_lower_bound(double M0, double p, double K, double B2p2, double ell) {
  if (!(M0 > 0.0)) throw std::invalid_argument("blowup_lower_bound: M(0) must be positive");
  if (!(p > 2.0)) throw std::invalid_argument("blowup_lower_bound: p must exceed 2");
  if (!(K > 0.0) || !(B2p2 > 0.0))
    throw std::invalid_argument("blowup_lower_bound: K and B must be positive");
  if (!(ell > 0.0) || !(ell <= 1.0))
    throw std::invalid_argument("blowup_lower_bound: ell must lie in (0, 1]");
  const double c = std::pow(ell, p - 1.0) * std::pow(M0, 2.0 - p);
  return std::log1p(c) / ((p - 2.0) * K * B2p2);
}

double blowup_lower_bound(const RadialMesh& mesh, std::span<const double> u0,
                          std::span<const double> v0, const ProblemSpec& spec,
                          const kernel::KernelSpec& kernel, double B2p2) {
  const double M0 = l2_sq_norm(mesh, v0) + grad_sq_norm(mesh, u0);
  return blowup_lower_bound(M0, spec.p, spec.K(), B2p2, kernel::residual_elasticity(kernel));
}

double upper_bound_ratio(const UpperBoundData& d, double eta, double mu) {
  const double num = 2.0 * d.u0_sq + 2.0 * eta * mu * mu;
  const double den = (d.p - 2.0) * d.u0u1 + eta * mu - 2.0 * d.u0_hardy_sq;
  return den > 0.0 ? num / den : kernel::kInfinity;
}

UpperBound blowup_upper_bound(const UpperBoundData& data, const SearchBox& box) {
  if (!(box.mu_min > 0.0) || !(box.mu_max > box.mu_min) || box.grid < 2)
    throw std::invalid_argument("blowup_upper_bound: invalid search box");
  UpperBound out;
  const double tol = 1e-12 * (std::abs(data.d) + 1.0);
  if (data.E0 < -tol) {
    out.energy_case = EnergyCase::negative_E0;
    out.eta_max = -2.0 * data.E0;
  } else if (data.E0 <= tol) {
    out.energy_case = EnergyCase::zero_E0;
  } else {
    out.energy_case = EnergyCase::positive_E0;
    if (!(data.E0 < data.d)) {
      out.reason = "E(0) >= d";
      return out;
    }
    if (!(data.gamma_est > 0.0)) {
      out.reason = "a priori gamma is not positive, eta range empty";
      return out;
    }
    out.eta_max = 2.0 * (data.E0 / data.d) * data.gamma_est;
  }

  if (out.energy_case == EnergyCase::zero_E0) {
    if (!(data.u0u1 > 0.0)) {
      out.reason = "zero-energy case needs (u0, u1) > 0";
      return out;
    }
    const double T = upper_bound_ratio(data, 0.0, 1.0);
    if (!std::isfinite(T)) {
      out.reason = "denominator never positive";
      return out;
    }
    out.feasible = true;
    out.T_upper = T;
    out.eta = 0.0;
    out.mu = 1.0;  // G does not depend on mu when eta = 0
    return out;
  }

  // Log coordinates over eta in (0, eta_max), mu in [mu_min, mu_max].
  const double le_lo = std::log(out.eta_max * 1e-6), le_hi = std::log(out.eta_max * (1.0 - 1e-9));
  const double lm_lo = std::log(box.mu_min), lm_hi = std::log(box.mu_max);
  auto objective = [&](double le, double lm) {
    const double eta = std::exp(le), mu = std::exp(lm);
    if (!(data.u0u1 + eta * mu > 0.0)) return kernel::kInfinity;  // G'(0) > 0
    return upper_bound_ratio(data, eta, mu);
  };
  double best = kernel::kInfinity, be = 0.0, bm = 0.0;
  for (int i = 0; i < box.grid; ++i) {
    const double le = le_lo + (le_hi - le_lo) * i / (box.grid - 1);
    for (int j = 0; j < box.grid; ++j) {
      const double lm = lm_lo + (lm_hi - lm_lo) * j / (box.grid - 1);
      const double v = objective(le, lm);
      if (v < best) {
        best = v;
        be = le;
        bm = lm;
      }
    }
  }
  if (!std::isfinite(best)) {
    out.reason = "denominator never positive in the search box";
    return out;
  }
  // Compass search from the best grid point, clamped to the box.
  double se = (le_hi - le_lo) / (box.grid - 1), sm = (lm_hi - lm_lo) / (box.grid - 1);
  for (int it = 0; it < box.refine_iters; ++it) {
    bool moved = false;
    const double cand[4][2] = {{be + se, bm}, {be - se, bm}, {be, bm + sm}, {be, bm - sm}};
    for (const auto& c : cand) {
      const double e = std::clamp(c[0], le_lo, le_hi), m = std::clamp(c[1], lm_lo, lm_hi);
      const double v = objective(e, m);
      if (v < best) {
        best = v;
        be = e;
        bm = m;
        moved = true;
      }
    }
    if (!moved) {
      se *= 0.5;
      sm *= 0.5;
    }
  }
  out.feasible = true;
  out.T_upper = best;
  out.eta = std::exp(be);
  out.mu = std::exp(bm);
  return out;
}

GammaEstimate estimate_gamma(std::span<const FunctionalRecord> records, double p, double d) {
  if (records.empty()) throw std::invalid_argument("estimate_gamma: no records");
  GammaEstimate g;
  g.value = kernel::kInfinity;
  for (const auto& r : records) {
    const double v = (p - 2.0) / (2.0 * p) * 2.0 * (r.elastic + r.memory) - d;
    if (v < g.value) {
      g.value = v;
      g.t_at_min = r.t;
    }
  }
  g.positive = g.value > 0.0;
  return g;
}

ConvexityResult convexity_check(std::span<const LevinePoint> pts, double p) {
  if (pts.size() < 3) throw std::invalid_argument("convexity_check: need at least three records");
  ConvexityResult out;
  out.min_value = kernel::kInfinity;
  for (std::size_t k = 1; k + 1 < pts.size(); ++k) {
    ConvexityPoint c;
    c.t = pts[k].t;
    c.G = pts[k].G;
    c.Gp = pts[k].Gp;
    // Second-order derivative of G' at t_k on a non-uniform three-point stencil.
    const double hm = pts[k].t - pts[k - 1].t, hp = pts[k + 1].t - pts[k].t;
    c.Gpp = (hm * hm * (pts[k + 1].Gp - pts[k].Gp) + hp * hp * (pts[k].Gp - pts[k - 1].Gp)) /
            (hm * hp * (hm + hp));
    c.combination = c.G * c.Gpp - 0.25 * (p + 2.0) * c.Gp * c.Gp;
    out.scale = std::max(out.scale, c.G * std::abs(c.Gpp));
    if (c.combination < out.min_value) {
      out.min_value = c.combination;
      out.t_at_min = c.t;
    }
    out.series.push_back(c);
  }
  return out;
}

std::vector<LevinePoint> rebase_levine(std::span<const LevinePoint> pts, const LevineParams& from,
                                       const LevineParams& to) {
  std::vector<LevinePoint> out(pts.begin(), pts.end());
  for (auto& q : out) {
    const double a = q.t + from.mu, b = q.t + to.mu;
    q.G += to.eta * b * b - from.eta * a * a + (to.T - from.T) * from.u0_hardy_sq;
    q.Gp += 2.0 * to.eta * b - 2.0 * from.eta * a;
  }
  return out;
}

BlowupReport blowup_report(std::span<const FunctionalRecord> records,
                           std::span<const LevinePoint> levine, const BlowupInputs& in,
                           const kernel::KernelSpec& kernel, const SearchBox& box) {
  if (records.size() < 3) throw std::invalid_argument("blowup_report: need at least three records");
  if (!(in.T_obs > 0.0)) throw std::invalid_argument("blowup_report: no blow-up time");
  BlowupReport rep;
  rep.T_obs = in.T_obs;
  rep.T_lower = blowup_lower_bound(in.M0, in.p, in.K, in.B2p2, in.ell);
  rep.lower_ok = in.T_obs >= rep.T_lower * (1.0 - kLowerBoundSlack);
  rep.theta = in.E0 / in.d;
  rep.gamma_est = (in.p - 2.0) / (2.0 * in.p) * in.grad_u0_sq - in.d;
  rep.gamma_run = estimate_gamma(records, in.p, in.d);
  rep.mass = 1.0 - in.ell;

  const bool in_V = in.I0 < 0.0 && in.E0 < in.d;
  if (rep.theta <= 1.0) {
    const auto mb = kernel::blowup_mass_bound(in.p, rep.theta);
    rep.mass_bound = mb.value;
    rep.mass_condition_ok = rep.mass < mb.value;
  }

  UpperBoundData ud{in.u0_sq, in.u0_hardy_sq, in.u0u1, in.p, in.E0, in.d, rep.gamma_est};
  const auto ub = blowup_upper_bound(ud, box);
  rep.energy_case = ub.energy_case;
  if (!in_V) {
    rep.upper_note = "upper bound not applicable: data not in V";
  } else if (!rep.mass_condition_ok) {
    rep.upper_note = "upper bound not applicable: kernel mass violates the mass condition";
  } else if (!ub.feasible) {
    rep.upper_note = "upper bound not applicable: " + ub.reason;
  } else {
    rep.T_upper = ub.T_upper;
    rep.eta_star = ub.eta;
    rep.mu_star = ub.mu;
    rep.upper_ok = in.T_obs <= ub.T_upper;
    const double G0 = in.u0_sq + in.T_obs * in.u0_hardy_sq + ub.eta * ub.mu * ub.mu;
    const double Gp0 = 2.0 * in.u0u1 + 2.0 * ub.eta * ub.mu;
    rep.in_proof_bound = 4.0 * G0 / ((in.p - 2.0) * Gp0);
  }

  LevineParams target{rep.eta_star, rep.T_upper ? rep.mu_star : 1.0, records.back().t,
                      in.levine.u0_hardy_sq};
  const auto pts = rebase_levine(levine, in.levine, target);
  rep.convexity = convexity_check(pts, in.p);
  rep.convexity_min = rep.convexity.min_value;
  rep.convexity_scale = rep.convexity.scale;
  rep.convexity_tol = 5.0 * in.dt0;
  rep.convexity_ok = rep.convexity_min >= -rep.convexity_tol * rep.convexity_scale;
  (void)kernel;
  return rep;
}

BlowupInputs blowup_inputs(const solver::Trajectory& traj, const RadialMesh& mesh,
                           const ProblemSpec& spec, const kernel::KernelSpec& kernel,
                           const wellpot::WellReport& well, double dt0) {
  if (traj.status != solver::Status::blewup || !traj.T_obs)
    throw std::invalid_argument("blowup_report: trajectory did not blow up (status " +
                                solver::to_string(traj.status) + ")");
  BlowupInputs in;
  in.T_obs = *traj.T_obs;
  const auto cls = wellpot::classify(mesh, traj.u0, traj.v0, spec, kernel, well);
  in.E0 = cls.E0;
  in.I0 = cls.I0;
  in.d = well.d;
  in.ell = kernel::residual_elasticity(kernel);
  in.p = spec.p;
  in.K = spec.K();
  in.B2p2 = well.B2p2;
  in.grad_u0_sq = grad_sq_norm(mesh, traj.u0);
  in.M0 = l2_sq_norm(mesh, traj.v0) + in.grad_u0_sq;
  in.u0_sq = l2_sq_norm(mesh, traj.u0);
  in.u0_hardy_sq = traj.u0_hardy_sq;
  in.u0u1 = inner(mesh, traj.u0, traj.v0);
  in.dt0 = dt0;
  in.levine = traj.levine;
  return in;
}

BlowupReport blowup_report(const solver::Trajectory& traj, const RadialMesh& mesh,
                           const ProblemSpec& spec, const kernel::KernelSpec& kernel,
                           const wellpot::WellReport& well, double dt0, const SearchBox& box) {
  const auto in = blowup_inputs(traj, mesh, spec, kernel, well, dt0);
  std::vector<LevinePoint> pts;
  pts.reserve(traj.records.size());
  for (const auto& r : traj.records) pts.push_back({r.t, r.G, r.Gp});
  return blowup_report(traj.records, pts, in, kernel, box);
}

}  // namespace vwlab::analysis
