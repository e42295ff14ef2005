#include "vwlab/wellpot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "vwlab/functionals.hpp"

namespace vwlab::wellpot {

std::string to_string(WellSet s) {
  switch (s) {
    case WellSet::W:
      return "W";
    case WellSet::V:
      return "V";
    case WellSet::boundary:
      return "boundary";
    case WellSet::neither:
      return "neither";
  }
  return "unknown";
}

Stiffness::Stiffness(const RadialMesh& mesh) {
  const int N = mesh.size();
  const double h = mesh.h();
  const auto areas = mesh.face_areas();
  diag.assign(N, 0.0);
  lower.assign(N, 0.0);
  for (int i = 1; i < N; ++i) {
    const double c = areas[i] / h;
    diag[i - 1] += c;
    diag[i] += c;
    lower[i] = -c;
  }
  // Half-cell Dirichlet face: areas (h/2) (2 U / h)^2.
  diag[N - 1] += 2.0 * areas[N] / h;
}

std::vector<double> Stiffness::apply(std::span<const double> w) const {
  const std::size_t N = diag.size();
  std::vector<double> out(N);
  for (std::size_t i = 0; i < N; ++i) {
    double s = diag[i] * w[i];
    if (i > 0) s += lower[i] * w[i - 1];
    if (i + 1 < N) s += lower[i + 1] * w[i + 1];
    out[i] = s;
  }
  return out;
}

std::vector<double> Stiffness::solve(std::span<const double> rhs) const {
  // Thomas algorithm; S is symmetric positive definite so no pivoting.
  const std::size_t N = diag.size();
  std::vector<double> c(N, 0.0), x(rhs.begin(), rhs.end());
  double denom = diag[0];
  for (std::size_t i = 0; i < N; ++i) {
    if (i > 0) {
      denom = diag[i] - lower[i] * c[i - 1];
      x[i] = (x[i] - lower[i] * x[i - 1]);
    }
    if (i + 1 < N) c[i] = lower[i + 1] / denom;
    x[i] /= denom;
  }
  for (std::size_t i = N - 1; i-- > 0;) x[i] -= c[i] * x[i + 1];
  return x;
}

double lambda_star(const RadialMesh& mesh, std::span<const double> w, const ProblemSpec& spec,
                   double ell) {
  const double A = grad_sq_norm(mesh, w);
  const double B = weighted_lp_norm(mesh, w, spec.k, spec.p);
  if (!(B > 0.0) || !(A > 0.0))
    throw std::invalid_argument("lambda_star: source integral vanishes, no finite Nehari scaling");
  return std::pow(ell * A / B, 1.0 / (spec.p - 2.0));
}

double mountain_pass_value(const RadialMesh& mesh, std::span<const double> w,
                           const ProblemSpec& spec, double ell) {
  const double A = grad_sq_norm(mesh, w);
  const double B = weighted_lp_norm(mesh, w, spec.k, spec.p);
  if (!(B > 0.0) || !(A > 0.0))
    throw std::invalid_argument("mountain_pass_value: source integral vanishes");
  const double p = spec.p;
  return (0.5 - 1.0 / p) * ell * A * std::pow(ell * A / B, 2.0 / (p - 2.0));
}

namespace {

double objective(std::span<const double> vol, std::span<const double> k, std::span<const double> w,
                 double r) {
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += vol[i] * k[i] * std::pow(std::abs(w[i]), r);
  return s;
}

std::vector<double> objective_gradient(std::span<const double> vol, std::span<const double> k,
                                       std::span<const double> w, double r) {
  std::vector<double> g(w.size());
  for (std::size_t i = 0; i < w.size(); ++i)
    g[i] = r * vol[i] * k[i] * std::pow(std::abs(w[i]), r - 2.0) * w[i];
  return g;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void normalize(const Stiffness& S, std::vector<double>& w, double level) {
  const double a = dot(w, S.apply(w));
  if (!(a > 0.0)) throw std::invalid_argument("extremal problem: zero initial field");
  const double s = std::sqrt(level / a);
  for (double& v : w) v *= s;
}

bool flat(const std::vector<double>& values, const OptimizerParams& params) {
  const std::size_t n = values.size();
  const auto win = static_cast<std::size_t>(params.window);
  if (n <= win) return false;
  const double now = values.back();
  return std::abs(now - values[n - 1 - win]) <= params.rel_tol * std::abs(now);
}

RadialField bump_profile(const RadialMesh& mesh) {
  RadialField w(mesh.size());
  const double R = mesh.radius();
  for (int i = 0; i < mesh.size(); ++i) {
    const double s = mesh.nodes()[i] / R;
    w[i] = 1.0 - s * s;
  }
  return w;
}

}  // namespace

ExtremalResult maximize_on_sphere(const RadialMesh& mesh, std::span<const double> k_values,
                                  double r, double level, RadialField init,
                                  const OptimizerParams& params) {
  const Stiffness S(mesh);
  const auto vol = mesh.cell_volumes();
  auto w = std::move(init);
  normalize(S, w, level);

  ExtremalResult res;
  std::vector<double> values{objective(vol, k_values, w, r)};
  double alpha = 0.5;
  std::vector<double> trial(w.size());
  for (int it = 0; it < params.max_iter; ++it) {
    const auto g = objective_gradient(vol, k_values, w, r);
    const auto d = S.solve(g);  // Sobolev gradient
    const double dSd = dot(d, g);
    const double proj = dot(g, w) / level;
    std::vector<double> tangent(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) tangent[i] = d[i] - proj * w[i];
    const double tangent_sq = dot(tangent, S.apply(tangent));
    res.residual = dSd > 0.0 ? std::sqrt(tangent_sq / dSd) : 0.0;
    res.iterations = it + 1;
    if (tangent_sq <= 0.0) {
      res.converged = true;
      break;
    }
    const double unit = std::sqrt(level / tangent_sq);

    bool accepted = false;
    while (alpha > 1e-14) {
      const double step = alpha * unit;
      for (std::size_t i = 0; i < w.size(); ++i) trial[i] = w[i] + step * tangent[i];
      normalize(S, trial, level);
      const double v = objective(vol, k_values, trial, r);
      if (v > values.back()) {
        w.swap(trial);
        values.push_back(v);
        accepted = true;
        alpha = std::min(2.0 * alpha, 4.0);
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted || flat(values, params)) {
      res.converged = true;
      break;
    }
  }
  res.value = values.back();
  res.field = std::move(w);
  return res;
}

ExtremalResult estimate_B_r_full(const RadialMesh& mesh, double r, const OptimizerParams& params) {
  const int n = mesh.dim();
  if (!(r >= 2.0) || r > 2.0 * n / (n - 2.0) * (1.0 + 1e-14))
    throw std::invalid_argument("estimate_B_r: r must lie in [2, 2n/(n-2)]");
  const Stiffness S(mesh);
  const auto vol = mesh.cell_volumes();
  const std::vector<double> ones(mesh.size(), 1.0);

  // Nonlinear inverse iteration w <- S^{-1}(|w|^{r-2} w) on ||grad w|| = 1,
  // started from a positive profile vanishing at R.
  RadialField w(mesh.size());
  const double R = mesh.radius();
  for (int i = 0; i < mesh.size(); ++i)
    w[i] = std::cos(0.5 * std::numbers::pi * mesh.nodes()[i] / R);
  normalize(S, w, 1.0);

  ExtremalResult res;
  std::vector<double> values{objective(vol, ones, w, r)};
  for (int it = 0; it < params.max_iter; ++it) {
    auto next = S.solve(objective_gradient(vol, ones, w, r));
    normalize(S, next, 1.0);
    double diff = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) diff = std::max(diff, std::abs(next[i] - w[i]));
    w.swap(next);
    values.push_back(objective(vol, ones, w, r));
    res.iterations = it + 1;
    res.residual = diff / linf_norm(w);
    if (flat(values, params) || res.residual < 1e-14) {
      res.converged = true;
      break;
    }
  }
  res.value = values.back();
  res.field = std::move(w);
  return res;
}

double estimate_B_r(const RadialMesh& mesh, double r, const OptimizerParams& params) {
  return estimate_B_r_full(mesh, r, params).value;
}

WellReport well_depth(const RadialMesh& mesh, const ProblemSpec& spec,
                      const kernel::KernelSpec& kernel, const OptimizerParams& params) {
  spec.validate();
  if (mesh.dim() != spec.n || mesh.radius() != spec.R)
    throw std::invalid_argument("well_depth: mesh does not match the problem");
  const auto cert = kernel::certify(kernel, 64, 1e3);
  if (!cert.a1_ok) throw std::invalid_argument("well_depth: kernel violates (A1), ell not in (0,1)");

  const double p = spec.p;
  const double ell = cert.ell;
  const auto k_values = sample_k(mesh, spec.k);
  const double level = 1.0 / ell;
  const auto depth_of = [&](double bmax) { return (0.5 - 1.0 / p) * std::pow(bmax, -2.0 / (p - 2.0)); };

  WellReport rep;
  rep.ell = ell;
  const auto main = maximize_on_sphere(mesh, k_values, p, level, bump_profile(mesh), params);
  rep.d = depth_of(main.value);
  rep.iterations = main.iterations;
  rep.residual = main.residual;
  rep.converged = main.converged;
  rep.lambda_star_of_minimizer = lambda_star(mesh, main.field, spec, ell);
  rep.minimizer_field = main.field;
  for (double& v : rep.minimizer_field) v *= rep.lambda_star_of_minimizer;

  std::mt19937_64 rng(params.seed);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  double lo = rep.d, hi = rep.d, sum = rep.d;
  for (int k = 0; k < params.restarts; ++k) {
    std::array<double, 4> a{};
    for (double& c : a) c = coef(rng);
    RadialField init = bump_profile(mesh);
    for (int i = 0; i < mesh.size(); ++i) {
      const double s = mesh.nodes()[i] / spec.R;
      double pert = 0.0;
      for (std::size_t m = 0; m < a.size(); ++m) pert += a[m] * std::cos((m + 1) * std::numbers::pi * s);
      init[i] *= std::exp(0.5 * pert);
    }
    const auto res = maximize_on_sphere(mesh, k_values, p, level, std::move(init), params);
    const double dk = depth_of(res.value);
    rep.restart_depths.push_back(dk);
    lo = std::min(lo, dk);
    hi = std::max(hi, dk);
    sum += dk;
  }
  rep.restart_spread = (hi - lo) / (sum / (1.0 + params.restarts));

  rep.B2 = estimate_B_r(mesh, 2.0, params);
  rep.Bp = estimate_B_r(mesh, p, params);
  rep.B2p2 = estimate_B_r(mesh, 2.0 * (p - 1.0), params);
  rep.small_energy_threshold =
      (p - 2.0) * ell / (2.0 * p) * std::pow(ell / (2.0 * spec.K() * rep.Bp), 2.0 / (p - 2.0));
  return rep;
}

Classification classify(const RadialMesh& mesh, std::span<const double> u0,
                        std::span<const double> v0, const ProblemSpec& spec,
                        const kernel::KernelSpec& kernel, const WellReport& well) {
  Classification c;
  const double A = grad_sq_norm(mesh, u0);
  const double B = weighted_lp_norm(mesh, u0, spec.k, spec.p);
  const double ell = kernel::residual_elasticity(kernel);
  c.E0 = 0.5 * l2_sq_norm(mesh, v0) + 0.5 * A - B / spec.p;
  c.I0 = ell * A - B;
  c.theta = c.E0 / well.d;
  c.small_energy_ok = c.E0 < std::min(well.d, well.small_energy_threshold);

  const bool nonzero = std::any_of(u0.begin(), u0.end(), [](double v) { return v != 0.0; });
  if (!nonzero || !(c.E0 < well.d)) {
    c.set = WellSet::neither;
  } else if (std::abs(c.I0) <= 1e-12 * ell * A) {
    c.set = WellSet::boundary;
  } else {
    c.set = c.I0 > 0.0 ? WellSet::W : WellSet::V;
  }
  return c;
}

ScaleResult scale_into(WellSet target, std::span<const double> profile,
                       std::span<const double> v0, const RadialMesh& mesh,
                       const ProblemSpec& spec, const kernel::KernelSpec& kernel,
                       const WellReport& well, double margin) {
  if (target != WellSet::W && target != WellSet::V)
    throw std::invalid_argument("scale_into: target must be W or V");
  if (!(margin >= 0.0) || !(margin < 1.0))
    throw std::invalid_argument("scale_into: margin must lie in [0, 1)");
  const double ell = kernel::residual_elasticity(kernel);
  const double A = grad_sq_norm(mesh, profile);
  const double B = weighted_lp_norm(mesh, profile, spec.k, spec.p);
  if (!(A > 0.0) || !(B > 0.0)) throw std::invalid_argument("scale_into: degenerate profile");
  const double p = spec.p;
  const double kinetic = 0.5 * l2_sq_norm(mesh, v0);
  const auto E0 = [&](double c) { return kinetic + 0.5 * c * c * A - std::pow(c, p) * B / p; };
  const double lstar = std::pow(ell * A / B, 1.0 / (p - 2.0));

  double c = 0.0;
  if (target == WellSet::W) {
    const double goal = (1.0 - margin) * std::min(well.d, well.small_energy_threshold);
    if (!(kinetic < goal))
      throw std::runtime_error("scale_into: the velocity alone exceeds the W energy budget");
    // E0 increases on [0, lambda*] since its peak (A/B)^{1/(p-2)} lies beyond lambda*.
    double lo = 0.0, hi = lstar;
    if (E0(hi) <= goal) {
      c = hi * (1.0 - 1e-6);
    } else {
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (E0(mid) <= goal ? lo : hi) = mid;
      }
      c = lo;
    }
  } else {
    const double goal = (1.0 - margin) * well.d;
    double lo = lstar * (1.0 + margin);
    if (E0(lo) <= goal) {
      c = lo;
    } else {
      lo = std::max(lo, std::pow(A / B, 1.0 / (p - 2.0)));
      double hi = 2.0 * lo;
      int guard = 0;
      while (E0(hi) > goal) {
        hi *= 2.0;
        if (++guard > 200) throw std::runtime_error("scale_into: V target unreachable");
      }
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (E0(mid) > goal ? lo : hi) = mid;
      }
      c = hi;
    }
  }

  RadialField u0(profile.begin(), profile.end());
  for (double& v : u0) v *= c;
  ScaleResult out{c, classify(mesh, u0, v0, spec, kernel, well)};
  if (out.classification.set != target)
    throw std::runtime_error("scale_into: requested set " + to_string(target) +
                             " not reached (got " + to_string(out.classification.set) + ")");
  return out;
}

}  // namespace vwlab::wellpot
