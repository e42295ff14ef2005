#include "vwlab/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vwlab::kernel {

KernelSpec KernelSpec::exponential(double b, double lambda) {
  if (!(b > 0.0) || !(lambda > 0.0))
    throw std::invalid_argument("exponential kernel needs b > 0 and lambda > 0");
  return {Family::exponential, b, lambda};
}

KernelSpec KernelSpec::polynomial_shift(double b, double nu) {
  if (!(b > 0.0) || !(nu > 0.0))
    throw std::invalid_argument("polynomial_shift kernel needs b > 0 and nu > 0");
  return {Family::polynomial_shift, b, nu};
}

double eval_f(const KernelSpec& spec, double t) {
  switch (spec.family) {
    case Family::exponential:
      return spec.b * std::exp(-spec.rate * t);
    case Family::polynomial_shift:
      return spec.b * std::pow(1.0 + t, -spec.rate);
  }
  return 0.0;
}

double eval_fprime(const KernelSpec& spec, double t) {
  switch (spec.family) {
    case Family::exponential:
      return -spec.rate * spec.b * std::exp(-spec.rate * t);
    case Family::polynomial_shift:
      return -spec.rate * spec.b * std::pow(1.0 + t, -spec.rate - 1.0);
  }
  return 0.0;
}

double cumulative_mass(const KernelSpec& spec, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("cumulative_mass: t must be >= 0");
  switch (spec.family) {
    case Family::exponential: {
      const double total = spec.b / spec.rate;
      if (std::isinf(t)) return total;
      return total * -std::expm1(-spec.rate * t);
    }
    case Family::polynomial_shift: {
      if (spec.rate <= 1.0)
        throw std::invalid_argument("polynomial_shift kernel with nu <= 1 has infinite mass");
      const double total = spec.b / (spec.rate - 1.0);
      if (std::isinf(t)) return total;
      return total * -std::expm1((1.0 - spec.rate) * std::log1p(t));
    }
  }
  return 0.0;
}

double residual_elasticity(const KernelSpec& spec) {
  return 1.0 - cumulative_mass(spec, kInfinity);
}

double decay_exponent(const KernelSpec& spec) {
  return spec.family == Family::exponential ? 1.0 : (spec.rate + 1.0) / spec.rate;
}

double decay_coefficient(const KernelSpec& spec) {
  if (spec.family == Family::exponential) return spec.rate;
  // f' = -nu b (1+t)^{-nu-1} = -nu b^{-1/nu} f^{(nu+1)/nu}
  return spec.rate * std::pow(spec.b, -1.0 / spec.rate);
}

KernelCertificate certify(const KernelSpec& spec, int sample_count, double horizon) {
  if (sample_count < 2) throw std::invalid_argument("certify: sample_count must be >= 2");
  if (!(horizon > 0.0)) throw std::invalid_argument("certify: horizon must be positive");

  KernelCertificate cert;
  cert.q = decay_exponent(spec);
  cert.xi0 = decay_coefficient(spec);
  cert.q_extended_warning = cert.q >= 1.5;

  const double f0 = eval_f(spec, 0.0);
  bool mass_ok = true;
  try {
    cert.ell = residual_elasticity(spec);
  } catch (const std::invalid_argument&) {
    cert.ell = -kInfinity;
    mass_ok = false;
  }

  // t = 0 followed by a geometric grid from horizon * 1e-6 up to horizon.
  const double t_lo = horizon * 1e-6;
  const double ratio = std::pow(horizon / t_lo, 1.0 / std::max(1, sample_count - 2));
  bool non_increasing = true;
  double violation = 0.0;
  for (int i = 0; i < sample_count; ++i) {
    const double t = i == 0 ? 0.0 : (i == sample_count - 1 ? horizon : t_lo * std::pow(ratio, i - 1));
    const double f = eval_f(spec, t);
    const double fp = eval_fprime(spec, t);
    if (fp > 0.0) non_increasing = false;
    violation = std::max(violation, fp + cert.xi0 * std::pow(f, cert.q));
  }
  cert.sample_grid_max_violation = violation;
  cert.a1_ok = f0 > 0.0 && mass_ok && cert.ell > 0.0 && cert.ell < 1.0 && non_increasing;
  cert.a2_ok = cert.a1_ok && violation <= 1e-10 * f0;
  return cert;
}

MassBound blowup_mass_bound(double p, double theta) {
  if (!(p > 2.0)) throw std::invalid_argument("blowup_mass_bound: p must exceed 2");
  if (!(theta <= 1.0)) throw std::invalid_argument("blowup_mass_bound: theta must be <= 1");
  const double tp = std::max(0.0, theta);
  const double bracket = (1.0 - tp) * (1.0 - tp) * p + 2.0 * tp * (1.0 - tp);
  if (bracket == 0.0) return {1.0, true};
  return {(p - 2.0) / (p - 2.0 + 1.0 / bracket), false};
}

double xi_power_integral(const KernelSpec& spec, double t1, double t, double power) {
  if (!(t1 > 0.0) || !(t1 <= t))
    throw std::invalid_argument("xi_power_integral: need 0 < t1 <= t");
  return std::pow(decay_coefficient(spec), power) * (t - t1);
}

bool check_improved_rate_condition(double q) {
  if (!(q > 1.0)) throw std::invalid_argument("improved-rate condition needs q > 1");
  // Constant xi: integrand ~ t^{-1/(2q-2)}, convergent iff the exponent exceeds 1.
  return 1.0 / (2.0 * q - 2.0) > 1.0;
}

bool check_improved_rate_condition(const KernelSpec& spec) {
  return check_improved_rate_condition(decay_exponent(spec));
}

}  // namespace vwlab::kernel
