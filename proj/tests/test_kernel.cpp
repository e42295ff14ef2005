#include <cmath>
#include <initializer_list>
#include <limits>
#include <stdexcept>

#include "doctest.h"
#include "vwlab/kernel.hpp"

using namespace vwlab::kernel;

TEST_CASE("eval_f closed forms") {
  CHECK(eval_f(KernelSpec::exponential(0.5, 1.0), 0.0) == 0.5);
  CHECK(eval_f(KernelSpec::polynomial_shift(1.5, 4.0), 0.0) == 1.5);
  CHECK(eval_f(KernelSpec::exponential(0.5, 1.0), std::log(2.0)) == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("eval_f positive and non-increasing") {
  for (const auto& k : {KernelSpec::exponential(0.5, 1.0), KernelSpec::polynomial_shift(1.5, 4.0)}) {
    double prev = eval_f(k, 0.0);
    for (double t = 0.01; t < 50.0; t *= 1.3) {
      const double f = eval_f(k, t);
      CHECK(f > 0.0);
      CHECK(f <= prev);
      prev = f;
    }
  }
}

TEST_CASE("eval_fprime matches a centered difference") {
  for (const auto& k : {KernelSpec::exponential(0.5, 1.3), KernelSpec::polynomial_shift(1.5, 4.0)}) {
    for (double t : {0.1, 1.0, 7.0}) {
      const double e = 1e-5;
      const double fd = (eval_f(k, t + e) - eval_f(k, t - e)) / (2 * e);
      CHECK(eval_fprime(k, t) == doctest::Approx(fd).epsilon(1e-8));
    }
  }
}

TEST_CASE("cumulative_mass") {
  const auto e = KernelSpec::exponential(0.5, 1.0);
  const auto p = KernelSpec::polynomial_shift(1.5, 4.0);
  CHECK(cumulative_mass(e, kInfinity) == doctest::Approx(0.5));
  CHECK(residual_elasticity(e) == doctest::Approx(0.5));
  CHECK(cumulative_mass(p, kInfinity) == doctest::Approx(0.5));
  CHECK(residual_elasticity(p) == doctest::Approx(0.5));
  CHECK(cumulative_mass(e, 0.0) == 0.0);
  CHECK(cumulative_mass(p, 0.0) == 0.0);
  CHECK_THROWS_AS(cumulative_mass(KernelSpec::polynomial_shift(0.5, 1.0), 1.0), std::invalid_argument);
  CHECK_THROWS_AS(cumulative_mass(KernelSpec::polynomial_shift(0.5, 0.7), 1.0), std::invalid_argument);
}

TEST_CASE("cumulative_mass agrees with Simpson quadrature and approaches 1 - ell") {
  for (const auto& k : {KernelSpec::exponential(0.7, 2.0), KernelSpec::polynomial_shift(1.5, 4.0)}) {
    const double T = 3.0;
    const int n = 2000;
    const double h = T / n;
    double s = eval_f(k, 0) + eval_f(k, T);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * eval_f(k, i * h);
    CHECK(cumulative_mass(k, T) == doctest::Approx(s * h / 3).epsilon(1e-10));
    double prev = 0.0;
    for (double t = 0.1; t < 100; t *= 2) {
      CHECK(cumulative_mass(k, t) >= prev);
      prev = cumulative_mass(k, t);
    }
    // Tail beyond 10^3 is below the closed-form bound.
    CHECK(std::abs(cumulative_mass(k, 1e3) + residual_elasticity(k) - 1.0) <= 1e-8);
  }
}

TEST_CASE("certify examples") {
  const auto c1 = certify(KernelSpec::exponential(0.5, 1.0), 64, 100.0);
  CHECK(c1.ell == doctest::Approx(0.5));
  CHECK(c1.q == 1.0);
  CHECK(c1.xi0 == 1.0);
  CHECK(c1.a1_ok);
  CHECK(c1.a2_ok);
  CHECK_FALSE(c1.q_extended_warning);

  const auto c2 = certify(KernelSpec::polynomial_shift(1.5, 4.0), 64, 100.0);
  CHECK(c2.ell == doctest::Approx(0.5));
  CHECK(c2.q == doctest::Approx(1.25));
  CHECK(c2.xi0 == doctest::Approx(4.0 * std::pow(1.5, -0.25)));
  CHECK(c2.xi0 == doctest::Approx(3.6144).epsilon(1e-4));
  CHECK(c2.a1_ok);
  CHECK(c2.a2_ok);

  const auto c3 = certify(KernelSpec::exponential(2.0, 1.0), 64, 100.0);
  CHECK_FALSE(c3.a1_ok);
  CHECK(c3.ell == doctest::Approx(-1.0));

  const auto c4 = certify(KernelSpec::polynomial_shift(0.5, 1.0), 16, 10.0);
  CHECK_FALSE(c4.a1_ok);

  const auto c5 = certify(KernelSpec::polynomial_shift(0.5, 2.0), 16, 10.0);
  CHECK(c5.q == doctest::Approx(1.5));
  CHECK(c5.q_extended_warning);

  CHECK_THROWS(certify(KernelSpec::exponential(0.5, 1.0), 1, 10.0));
}

TEST_CASE("certificate properties on samples") {
  for (const auto& k : {KernelSpec::exponential(0.3, 0.9), KernelSpec::polynomial_shift(1.2, 3.5)}) {
    const auto c = certify(k, 200, 1e3);
    const double f0 = eval_f(k, 0);
    for (double t = 0.0; t < 1e3; t = t * 1.7 + 1e-3) {
      CHECK(eval_f(k, t) > 0.0);
      CHECK(eval_fprime(k, t) <= 0.0);
      CHECK(eval_fprime(k, t) + c.xi0 * std::pow(eval_f(k, t), c.q) <= 1e-10 * f0);
    }
  }
}

TEST_CASE("certify is deterministic") {
  const auto k = KernelSpec::polynomial_shift(1.5, 4.0);
  const auto a = certify(k, 50, 20.0), b = certify(k, 50, 20.0);
  CHECK(a.ell == b.ell);
  CHECK(a.xi0 == b.xi0);
  CHECK(a.sample_grid_max_violation == b.sample_grid_max_violation);
}

TEST_CASE("blowup_mass_bound") {
  CHECK(blowup_mass_bound(3, 0).value == doctest::Approx(0.75));
  CHECK(blowup_mass_bound(3, -5).value == doctest::Approx(0.75));
  // bracket (1 - 1/2)^2 * 3 + 2 * 1/2 * 1/2 = 5/4, so 1 / (1 + 4/5)
  CHECK(blowup_mass_bound(3, 0.5).value == doctest::Approx(5.0 / 9.0));
  for (double p : {2.5, 3.0, 3.7})
    CHECK(blowup_mass_bound(p, 0).value == doctest::Approx(p * (p - 2) / ((p - 1) * (p - 1))));
  const auto one = blowup_mass_bound(3, 1.0);
  CHECK(one.degenerate);
  CHECK(one.value == 1.0);
  CHECK_THROWS(blowup_mass_bound(3, 1.5));
  CHECK_THROWS(blowup_mass_bound(2, 0.5));
}

TEST_CASE("blowup_mass_bound is non-increasing on [0, 1)") {
  for (double p : {2.2, 3.0, 3.9}) {
    double prev = blowup_mass_bound(p, 0).value;
    for (double th = 0.01; th < 1.0; th += 0.01) {
      const double v = blowup_mass_bound(p, th).value;
      CHECK(v <= prev + 1e-15);
      prev = v;
    }
  }
}

TEST_CASE("xi_power_integral") {
  CHECK(xi_power_integral(KernelSpec::exponential(0.5, 1.0), 1, 3, 1) == doctest::Approx(2.0));
  CHECK(xi_power_integral(KernelSpec::exponential(0.5, 2.0), 0.5, 1.5, 3) == doctest::Approx(8.0));
  const auto p = KernelSpec::polynomial_shift(1.5, 4.0);
  CHECK(xi_power_integral(p, 1, 2, 1.5) == doctest::Approx(std::pow(decay_coefficient(p), 1.5)));
  CHECK(xi_power_integral(p, 1, 2, 1.5) == doctest::Approx(6.8716).epsilon(1e-4));
  CHECK_THROWS(xi_power_integral(p, 0.0, 2, 1));
  CHECK_THROWS(xi_power_integral(p, 3.0, 2, 1));
}

TEST_CASE("check_improved_rate_condition") {
  CHECK(check_improved_rate_condition(1.25));
  CHECK_FALSE(check_improved_rate_condition(1.5));
  CHECK(check_improved_rate_condition(1.4));
  CHECK_THROWS(check_improved_rate_condition(1.0));
  CHECK(check_improved_rate_condition(KernelSpec::polynomial_shift(1.5, 4.0)));
  CHECK_THROWS(check_improved_rate_condition(KernelSpec::exponential(0.5, 1.0)));
}
