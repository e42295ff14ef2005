#pragma once

#include <limits>

namespace vwlab::kernel {

enum class Family { exponential, polynomial_shift };

/// Relaxation kernel f(t) of the memory term.
///
/// exponential:       f(t) = b e^{-rate t}
/// polynomial_shift:  f(t) = b (1 + t)^{-rate}, rate > 1
///
/// Both families satisfy f' = -xi0 f^q with constant xi0, so every downstream
/// integral has a closed form.
struct KernelSpec {
  Family family = Family::exponential;
  double b = 0.5;
  double rate = 1.0;  // lambda for exponential, nu for polynomial_shift

  static KernelSpec exponential(double b, double lambda);
  static KernelSpec polynomial_shift(double b, double nu);
};

struct KernelCertificate {
  double ell = 0.0;
  double q = 1.0;
  double xi0 = 0.0;
  bool a1_ok = false;
  bool a2_ok = false;
  /// q >= 3/2: decay envelope only covered by the extended (q < 2) range.
  bool q_extended_warning = false;
  double sample_grid_max_violation = 0.0;
};

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

double eval_f(const KernelSpec& spec, double t);
double eval_fprime(const KernelSpec& spec, double t);

/// \int_0^t f(s) ds in closed form; t may be kInfinity.
/// Throws std::invalid_argument for polynomial_shift with nu <= 1.
double cumulative_mass(const KernelSpec& spec, double t);

/// 1 - \int_0^\infty f.
double residual_elasticity(const KernelSpec& spec);

/// Decay exponent q in f' <= -xi f^q.
double decay_exponent(const KernelSpec& spec);
/// Constant xi0 in f' = -xi0 f^q.
double decay_coefficient(const KernelSpec& spec);

/// Samples f' + xi0 f^q on a log-spaced grid over [0, horizon].
KernelCertificate certify(const KernelSpec& spec, int sample_count, double horizon);

struct MassBound {
  double value = 0.0;
  /// theta_+ == 1: the bracket vanishes and the bound degenerates to 1.
  bool degenerate = false;
};

/// Upper bound on the kernel mass under which V-data with E(0) = theta d
/// blows up: (p-2) / (p-2 + ((1-t)^2 p + 2t(1-t))^{-1}), t = max(0, theta).
MassBound blowup_mass_bound(double p, double theta);

/// \int_{t1}^t xi(s)^power ds.
double xi_power_integral(const KernelSpec& spec, double t1, double t, double power);

/// Whether \int_0^\infty (1 + \int_0^t xi^{2q-1})^{-1/(2q-2)} dt converges.
/// Throws for q == 1.
bool check_improved_rate_condition(const KernelSpec& spec);
bool check_improved_rate_condition(double q);

}  // namespace vwlab::kernel
