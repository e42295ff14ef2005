#include "vwlab/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace vwlab {

KProfile KProfile::constant(double c) {
  if (!(c >= 0.0)) throw std::invalid_argument("k profile: c must be >= 0");
  return {Kind::constant, c};
}

KProfile KProfile::bump(double c) {
  if (!(c >= 0.0)) throw std::invalid_argument("k profile: c must be >= 0");
  return {Kind::bump, c};
}

double KProfile::operator()(double r, double R) const {
  if (kind == Kind::constant) return c;
  const double s = r / R;
  return c * (1.0 - s * s);
}

std::string KProfile::name() const { return kind == Kind::constant ? "constant" : "bump"; }

double ProblemSpec::p_upper() const { return (2.0 * n - 2.0) / (n - 2.0); }

void ProblemSpec::validate() const {
  if (n < 3) throw std::invalid_argument("problem.n must be >= 3");
  if (!(R > 0.0)) throw std::invalid_argument("problem.R must be positive");
  if (!(p > 2.0) || !(p < p_upper()))
    throw std::invalid_argument("problem.p = " + std::to_string(p) +
                                " must lie strictly inside (2, (2n-2)/(n-2)) = (2, " +
                                std::to_string(p_upper()) + ")");
  if (!(sigma >= 0.0) || !(sigma <= 2.0))
    throw std::invalid_argument("problem.sigma must lie in [0, 2]");
  if (!(k.c > 0.0))
    throw std::invalid_argument("problem.k vanishes identically; the Nehari manifold is empty");
}

namespace {

// omega \int_{a}^{b} r^{m-1} dr
std::vector<double> shell_moments(std::span<const double> faces, double omega, double m) {
  std::vector<double> out(faces.size() - 1);
  for (std::size_t i = 0; i + 1 < faces.size(); ++i)
    out[i] = omega * (std::pow(faces[i + 1], m) - std::pow(faces[i], m)) / m;
  return out;
}

}  // namespace

RadialMesh::RadialMesh(int n, double R, int N) : n_(n), R_(R), N_(N) {
  if (n < 3) throw std::invalid_argument("mesh: dimension must be >= 3");
  if (!(R > 0.0)) throw std::invalid_argument("mesh: radius must be positive");
  if (N < 2) throw std::invalid_argument("mesh: need at least 2 cells");
  h_ = R / N;
  omega_ = 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);

  nodes_.resize(N);
  faces_.resize(N + 1);
  for (int i = 0; i <= N; ++i) faces_[i] = i * h_;
  faces_[N] = R;
  for (int i = 0; i < N; ++i) nodes_[i] = (i + 0.5) * h_;

  volumes_ = shell_moments(faces_, omega_, n);
  areas_.resize(N + 1);
  face_weights_.resize(N + 1);
  for (int i = 0; i <= N; ++i) {
    areas_[i] = omega_ * std::pow(faces_[i], n - 1);
    face_weights_[i] = h_;
  }
  face_weights_[0] = 0.0;
  face_weights_[N] = 0.5 * h_;
}

std::vector<double> RadialMesh::hardy_weights(double sigma) const {
  if (!(sigma >= 0.0) || !(sigma <= 2.0))
    throw std::invalid_argument("hardy weights: sigma must lie in [0, 2]");
  if (sigma == 0.0) return volumes_;
  return shell_moments(faces_, omega_, n_ - sigma);
}

void check_size(const RadialMesh& mesh, std::span<const double> field) {
  if (static_cast<int>(field.size()) != mesh.size())
    throw std::invalid_argument("field size " + std::to_string(field.size()) +
                                " does not match mesh size " + std::to_string(mesh.size()));
}

std::vector<double> face_gradients(const RadialMesh& mesh, std::span<const double> field) {
  check_size(mesh, field);
  const int N = mesh.size();
  const double h = mesh.h();
  std::vector<double> g(N + 1);
  g[0] = 0.0;
  for (int i = 1; i < N; ++i) g[i] = (field[i] - field[i - 1]) / h;
  g[N] = -field[N - 1] / (0.5 * h);
  return g;
}

void laplacian_from_gradients(const RadialMesh& mesh, std::span<const double> grads,
                              std::span<double> out) {
  const auto areas = mesh.face_areas();
  const auto vol = mesh.cell_volumes();
  for (int i = 0; i < mesh.size(); ++i)
    out[i] = (areas[i + 1] * grads[i + 1] - areas[i] * grads[i]) / vol[i];
}

RadialField laplacian(const RadialMesh& mesh, std::span<const double> field) {
  const auto g = face_gradients(mesh, field);
  RadialField out(mesh.size());
  laplacian_from_gradients(mesh, g, out);
  return out;
}

double grad_inner_from_gradients(const RadialMesh& mesh, std::span<const double> ga,
                                 std::span<const double> gb) {
  const auto areas = mesh.face_areas();
  const auto fw = mesh.face_weights();
  double s = 0.0;
  for (int i = 1; i <= mesh.size(); ++i) s += areas[i] * fw[i] * ga[i] * gb[i];
  return s;
}

double grad_sq_norm_from_gradients(const RadialMesh& mesh, std::span<const double> grads) {
  return grad_inner_from_gradients(mesh, grads, grads);
}

double grad_sq_norm(const RadialMesh& mesh, std::span<const double> field) {
  return grad_sq_norm_from_gradients(mesh, face_gradients(mesh, field));
}

double weighted_lp_norm(const RadialMesh& mesh, std::span<const double> field, const KProfile& k,
                        double p) {
  check_size(mesh, field);
  if (!(p >= 1.0)) throw std::invalid_argument("weighted_lp_norm: p must be >= 1");
  const auto vol = mesh.cell_volumes();
  const auto r = mesh.nodes();
  double s = 0.0;
  for (int i = 0; i < mesh.size(); ++i)
    s += vol[i] * k(r[i], mesh.radius()) * std::pow(std::abs(field[i]), p);
  return s;
}

double lp_norm_pow(const RadialMesh& mesh, std::span<const double> field, double r) {
  return weighted_lp_norm(mesh, field, KProfile::constant(1.0), r);
}

double weighted_inner(std::span<const double> weights, std::span<const double> a,
                      std::span<const double> b) {
  if (a.size() != b.size() || a.size() != weights.size())
    throw std::invalid_argument("inner product: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += weights[i] * a[i] * b[i];
  return s;
}

double inner(const RadialMesh& mesh, std::span<const double> a, std::span<const double> b) {
  return weighted_inner(mesh.cell_volumes(), a, b);
}

double l2_sq_norm(const RadialMesh& mesh, std::span<const double> field) {
  return inner(mesh, field, field);
}

double inner_hardy(const RadialMesh& mesh, std::span<const double> a, std::span<const double> b,
                   double sigma) {
  if (sigma == 0.0) return inner(mesh, a, b);
  const auto w = mesh.hardy_weights(sigma);
  return weighted_inner(w, a, b);
}

double hardy_norm_sq(const RadialMesh& mesh, std::span<const double> field, double sigma) {
  return inner_hardy(mesh, field, field, sigma);
}

double linf_norm(std::span<const double> field) {
  double m = 0.0;
  for (double v : field) m = std::max(m, std::abs(v));
  return m;
}

std::vector<double> sample_k(const RadialMesh& mesh, const KProfile& k) {
  std::vector<double> out(mesh.size());
  const auto r = mesh.nodes();
  for (int i = 0; i < mesh.size(); ++i) out[i] = k(r[i], mesh.radius());
  return out;
}

}  // namespace vwlab
