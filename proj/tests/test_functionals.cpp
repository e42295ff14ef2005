#include <cmath>
#include <random>

#include "doctest.h"
#include "vwlab/functionals.hpp"

using namespace vwlab;
using kernel::KernelSpec;

namespace {

RadialField bump(const RadialMesh& m, double amp) {
  RadialField u(m.size());
  for (int i = 0; i < m.size(); ++i) {
    const double r = m.nodes()[i] / m.radius();
    u[i] = amp * (1 - r * r);
  }
  return u;
}

RadialField random_field(const RadialMesh& m, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  const double a = g(rng), b = g(rng), c = g(rng);
  RadialField u(m.size());
  for (int i = 0; i < m.size(); ++i) {
    const double r = m.nodes()[i];
    u[i] = (a + b * r + c * std::cos(3 * r)) * (1 - r);
  }
  return u;
}

struct Fixture {
  RadialMesh mesh{3, 1.0, 32};
  ProblemSpec spec;
  KernelSpec k = KernelSpec::exponential(0.5, 1.0);
};

}  // namespace

TEST_CASE("trapezoid weights") {
  const std::vector<double> t{0.0, 0.1, 0.3, 0.6};
  const auto w = trapezoid_weights(t, 3);
  CHECK(w[0] == doctest::Approx(0.05));
  CHECK(w[1] == doctest::Approx(0.15));
  CHECK(w[2] == doctest::Approx(0.25));
  CHECK(w[3] == doctest::Approx(0.15));
}

TEST_CASE("f_circ_grad and lambda_accumulator: empty, stationary, two-node") {
  Fixture fx;
  HistoryBuffer h(fx.mesh);
  const auto U0 = bump(fx.mesh, 1.0);
  h.push(0.0, U0);
  CHECK(f_circ_grad(h, fx.k, 0) == 0.0);
  CHECK(lambda_accumulator(h, 0) == 0.0);

  HistoryBuffer still(fx.mesh);
  for (int j = 0; j < 5; ++j) still.push(0.1 * j, U0);
  CHECK(f_circ_grad(still, fx.k, 4) == 0.0);
  CHECK(lambda_accumulator(still, 4) == 0.0);

  const double dt = 0.2;
  const auto U1 = bump(fx.mesh, 1.7);
  h.push(dt, U1);
  RadialField diff(fx.mesh.size());
  for (int i = 0; i < fx.mesh.size(); ++i) diff[i] = U1[i] - U0[i];
  const double g2 = grad_sq_norm(fx.mesh, diff);
  // s = t0 contributes f(dt) |grad(U1 - U0)|^2; s = t1 contributes f(0) * 0.
  CHECK(f_circ_grad(h, fx.k, 1) == doctest::Approx(dt / 2 * kernel::eval_f(fx.k, dt) * g2).epsilon(1e-13));
  CHECK(fprime_circ_grad(h, fx.k, 1) == doctest::Approx(dt / 2 * kernel::eval_fprime(fx.k, dt) * g2).epsilon(1e-13));
  CHECK(lambda_accumulator(h, 1) == doctest::Approx(dt / 2 * g2).epsilon(1e-13));

  const auto s = memory_sums(h, fx.k, 1);
  CHECK(s.f_circ == doctest::Approx(f_circ_grad(h, fx.k, 1)).epsilon(1e-14));
  CHECK(s.lambda == doctest::Approx(lambda_accumulator(h, 1)).epsilon(1e-14));
}

TEST_CASE("history rejects non-increasing times") {
  Fixture fx;
  HistoryBuffer h(fx.mesh);
  h.push(0.0, bump(fx.mesh, 1));
  CHECK_THROWS(h.push(0.0, bump(fx.mesh, 1)));
  CHECK(h.index_of(0.0) == 0);
  CHECK_THROWS(h.index_of(0.5));
}

TEST_CASE("energy examples") {
  Fixture fx;
  const RadialField zero(fx.mesh.size(), 0.0);
  CHECK(energy_parts(fx.mesh, fx.spec, fx.k, 0.0, zero, zero, 0.0).E() == 0.0);

  const auto u0 = bump(fx.mesh, 2.0);
  const auto e0 = energy_parts(fx.mesh, fx.spec, fx.k, 0.0, u0, zero, 0.0);
  const auto [J1, I1] = J_and_I(fx.mesh, u0, fx.spec, 1.0);
  (void)I1;
  CHECK(e0.E() == doctest::Approx(J1).epsilon(1e-13));

  const auto V = bump(fx.mesh, 0.7);
  const auto pk = energy_parts(fx.mesh, fx.spec, fx.k, 3.0, zero, V, 0.0);
  CHECK(pk.E() == doctest::Approx(0.5 * l2_sq_norm(fx.mesh, V)).epsilon(1e-14));
}

TEST_CASE("dissipation_rate examples") {
  Fixture fx;
  const RadialField zero(fx.mesh.size(), 0.0);
  HistoryBuffer h0(fx.mesh);
  h0.push(0.0, zero);
  CHECK(dissipation_rate(h0, 0, zero, fx.spec, fx.k) == 0.0);

  const auto V = bump(fx.mesh, 0.7);
  CHECK(dissipation_rate(h0, 0, V, fx.spec, fx.k) ==
        doctest::Approx(-hardy_norm_sq(fx.mesh, V, fx.spec.sigma)).epsilon(1e-13));

  auto spec0 = fx.spec;
  spec0.sigma = 0.0;
  const auto U = bump(fx.mesh, 1.3);
  HistoryBuffer h1(fx.mesh);
  h1.push(0.0, U);
  CHECK(dissipation_rate(h1, 0, zero, spec0, fx.k) ==
        doctest::Approx(-kernel::eval_f(fx.k, 0) / 2 * grad_sq_norm(fx.mesh, U)).epsilon(1e-13));
}

TEST_CASE("J_and_I") {
  Fixture fx;
  const RadialField zero(fx.mesh.size(), 0.0);
  const auto [J0, I0] = J_and_I(fx.mesh, zero, fx.spec, 0.5);
  CHECK(J0 == 0.0);
  CHECK(I0 == 0.0);

  const double ell = 0.5, p = fx.spec.p;
  const auto w = bump(fx.mesh, 1.0);
  const double A = grad_sq_norm(fx.mesh, w), B = weighted_lp_norm(fx.mesh, w, fx.spec.k, p);
  const double lam = std::pow(ell * A / B, 1.0 / (p - 2));
  RadialField on(w);
  for (double& x : on) x *= lam;
  const auto [Jn, In] = J_and_I(fx.mesh, on, fx.spec, ell);
  CHECK(std::abs(In) <= 1e-12 * ell * A * lam * lam);
  CHECK(Jn == doctest::Approx((0.5 - 1 / p) * ell * A * lam * lam).epsilon(1e-12));

  int sign_changes = 0;
  double prev = 1.0;
  for (double s = 0.01; s < 5 * lam; s += 0.01 * lam) {
    RadialField sw(w);
    for (double& x : sw) x *= s;
    const double I = J_and_I(fx.mesh, sw, fx.spec, ell).second;
    CHECK((s < lam * (1 - 1e-9) ? I > 0 : true));
    if (I * prev < 0) ++sign_changes;
    prev = I;
  }
  CHECK(sign_changes == 1);
}

TEST_CASE("identity J = (1/2 - 1/p) ell |grad w|^2 + I/p on random fields") {
  Fixture fx;
  std::mt19937_64 rng(5);
  for (double p : {2.5, 3.0, 3.8}) {
    auto spec = fx.spec;
    spec.p = p;
    for (int trial = 0; trial < 50; ++trial) {
      const auto w = random_field(fx.mesh, rng);
      const auto [J, I] = J_and_I(fx.mesh, w, spec, 0.37);
      const double rhs = (0.5 - 1 / p) * 0.37 * grad_sq_norm(fx.mesh, w) + I / p;
      CHECK(std::abs(J - rhs) <= 1e-12 * (std::abs(J) + std::abs(rhs) + 1e-300));
    }
  }
}

TEST_CASE("phi_psi and lyapunov_L") {
  Fixture fx;
  const RadialField zero(fx.mesh.size(), 0.0);
  const auto u = bump(fx.mesh, 1.0);
  HistoryBuffer h(fx.mesh);
  h.push(0.0, u);
  const auto [phi, psi] = phi_psi(h, 0, u, fx.k);
  CHECK(psi == 0.0);
  CHECK(phi == doctest::Approx(l2_sq_norm(fx.mesh, u)).epsilon(1e-14));
  CHECK(phi > 0);
  h.push(0.1, bump(fx.mesh, 1.2));
  const auto [p2, s2] = phi_psi(h, 1, zero, fx.k);
  CHECK(p2 == 0.0);
  CHECK(s2 == 0.0);

  FunctionalRecord rec;
  rec.E = 2.5;
  rec.phi = 1.0;
  rec.psi = -3.0;
  CHECK(lyapunov_L(rec, 0, 0) == 2.5);
  CHECK(lyapunov_L(FunctionalRecord{}, 0.1, 0.1) == 0.0);
}

TEST_CASE("M_functional") {
  Fixture fx;
  const RadialField zero(fx.mesh.size(), 0.0);
  const auto u0 = bump(fx.mesh, 1.0), u1 = bump(fx.mesh, 0.3);
  HistoryBuffer h(fx.mesh);
  h.push(0.0, u0);
  CHECK(M_functional(h, 0, u1, fx.k) ==
        doctest::Approx(l2_sq_norm(fx.mesh, u1) + grad_sq_norm(fx.mesh, u0)).epsilon(1e-13));
  HistoryBuffer hz(fx.mesh);
  hz.push(0.0, zero);
  CHECK(M_functional(hz, 0, zero, fx.k) == 0.0);
}

TEST_CASE("M >= 2E + (2/p) int k|u|^p on random histories") {
  Fixture fx;
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    HistoryBuffer h(fx.mesh);
    for (int j = 0; j < 6; ++j) h.push(0.05 * j, random_field(fx.mesh, rng));
    const auto ut = random_field(fx.mesh, rng);
    const double M = M_functional(h, 5, ut, fx.k);
    const double E = energy(h, 5, ut, fx.spec, fx.k).E();
    const double src = weighted_lp_norm(fx.mesh, h.snapshot(5), fx.spec.k, fx.spec.p);
    CHECK(M >= 2 * E + 2 / fx.spec.p * src - 1e-12 * std::abs(M));
    CHECK(M == doctest::Approx(2 * E + 2 / fx.spec.p * src).epsilon(1e-12));
    CHECK(f_circ_grad(h, fx.k, 5) >= 0.0);
    CHECK(lambda_accumulator(h, 5) >= 0.0);
  }
}

TEST_CASE("Levine G closed forms") {
  FunctionalRecord r0;
  LevineParams lp{0.0, 1.0, 4.0, 0.0};
  const auto z = levine_point(r0, lp);
  CHECK(z.G == 0.0);
  CHECK(z.Gp == 0.0);

  // t = 0: G = |u0|^2 + T |u0|_sigma^2 + eta mu^2, G' = 2(u0, u1) + 2 eta mu
  FunctionalRecord a;
  a.l2_norm = 2.0;
  a.phi = 0.75;
  LevineParams q{0.3, 1.5, 2.0, 0.4};
  const auto pa = levine_point(a, q);
  CHECK(pa.G == doctest::Approx(4.0 + 2.0 * 0.4 + 0.3 * 1.5 * 1.5));
  CHECK(pa.Gp == doctest::Approx(2 * 0.75 + 2 * 0.3 * 1.5));

  std::vector<FunctionalRecord> recs(5);
  for (int j = 0; j < 5; ++j) recs[j].t = 0.5 * j;
  const double p = 3.0;
  for (const auto& pt : levine_G(recs, {1.0, 2.0, 3.0, 0.0})) {
    CHECK(pt.G == doctest::Approx((pt.t + 2) * (pt.t + 2)));
    CHECK(pt.Gp == doctest::Approx(2 * (pt.t + 2)));
    const double conv = pt.G * 2.0 - (p + 2) / 4 * pt.Gp * pt.Gp;
    CHECK(conv == doctest::Approx(2 * (pt.t + 2) * (pt.t + 2) - (p + 2) * (pt.t + 2) * (pt.t + 2)));
    CHECK(conv < 0);
  }
  CHECK_THROWS(levine_G(recs, {1.0, 2.0, 1.0, 0.0}));
  CHECK_THROWS(levine_G(recs, {-1.0, 2.0, 3.0, 0.0}));
}

TEST_CASE("evaluate_record is consistent with the component functions") {
  Fixture fx;
  std::mt19937_64 rng(3);
  HistoryBuffer h(fx.mesh);
  for (int j = 0; j < 4; ++j) h.push(0.1 * j, random_field(fx.mesh, rng));
  const auto ut = random_field(fx.mesh, rng);
  const auto rec = evaluate_record(h, 3, ut, fx.spec, fx.k, RunningIntegrals{});
  CHECK(rec.t == doctest::Approx(0.3));
  CHECK(rec.E == doctest::Approx(energy(h, 3, ut, fx.spec, fx.k).E()).epsilon(1e-13));
  CHECK(rec.dissipation_rate == doctest::Approx(dissipation_rate(h, 3, ut, fx.spec, fx.k)).epsilon(1e-13));
  CHECK(rec.M == doctest::Approx(M_functional(h, 3, ut, fx.k)).epsilon(1e-13));
  CHECK(rec.mass == doctest::Approx(kernel::cumulative_mass(fx.k, 0.3)).epsilon(1e-13));
  CHECK(rec.Lambda >= 0.0);
}
