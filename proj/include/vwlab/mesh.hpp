#pragma once

#include <span>
#include <string>
#include <vector>

namespace vwlab {

/// Node values U(r_i) of a radial function u(x) = U(|x|).
using RadialField = std::vector<double>;

/// Radial source weight k(r) >= 0.
struct KProfile {
  enum class Kind { constant, bump };
  Kind kind = Kind::constant;
  double c = 1.0;

  static KProfile constant(double c);
  /// c (1 - (r/R)^2)
  static KProfile bump(double c);

  double operator()(double r, double R) const;
  /// sup over [0, R].
  double sup() const { return c; }
  std::string name() const;
};

/// Problem data of the radial ball B_R in R^n.
struct ProblemSpec {
  int n = 3;
  double R = 1.0;
  double p = 3.0;
  double sigma = 1.0;
  KProfile k;

  /// Upper end of the admissible exponent range, (2n-2)/(n-2).
  double p_upper() const;
  double K() const { return k.sup(); }
  /// Throws std::invalid_argument naming the violated bound.
  void validate() const;
};

/// Cell-centered radial grid on [0, R].
///
/// Cell i covers [rho_i, rho_{i+1}] with node r_i = (i + 1/2) h. Volumes are
/// the exact shell measures, so the discrete Laplacian below is exact on
/// quadratics and symmetric with respect to them.
class RadialMesh {
 public:
  RadialMesh(int n, double R, int N);

  int dim() const { return n_; }
  double radius() const { return R_; }
  int size() const { return N_; }
  double h() const { return h_; }
  /// Surface area of the unit sphere in R^n.
  double omega() const { return omega_; }

  std::span<const double> nodes() const { return nodes_; }
  std::span<const double> faces() const { return faces_; }
  /// omega (rho_{i+1}^n - rho_i^n) / n
  std::span<const double> cell_volumes() const { return volumes_; }
  /// omega rho_i^{n-1}, i = 0..N
  std::span<const double> face_areas() const { return areas_; }
  /// Quadrature weight of face i in the gradient norm (h interior, h/2 at R).
  std::span<const double> face_weights() const { return face_weights_; }

  /// omega \int_{cell} r^{n-1-sigma} dr: cell measure of the weight |x|^{-sigma}.
  std::vector<double> hardy_weights(double sigma) const;

 private:
  int n_;
  double R_;
  int N_;
  double h_;
  double omega_;
  std::vector<double> nodes_, faces_, volumes_, areas_, face_weights_;
};

void check_size(const RadialMesh& mesh, std::span<const double> field);

/// Face gradients g_0..g_N: g_0 = 0, interior (U_i - U_{i-1})/h,
/// boundary -U_{N-1}/(h/2).
std::vector<double> face_gradients(const RadialMesh& mesh, std::span<const double> field);

RadialField laplacian(const RadialMesh& mesh, std::span<const double> field);
/// Laplacian applied to precomputed face gradients.
void laplacian_from_gradients(const RadialMesh& mesh, std::span<const double> grads,
                              std::span<double> out);

double grad_sq_norm(const RadialMesh& mesh, std::span<const double> field);
/// Gradient norm from precomputed face gradients.
double grad_sq_norm_from_gradients(const RadialMesh& mesh, std::span<const double> grads);
/// (grad A, grad B) from precomputed face gradients.
double grad_inner_from_gradients(const RadialMesh& mesh, std::span<const double> ga,
                                 std::span<const double> gb);

/// \int k |U|^p via midpoint quadrature.
double weighted_lp_norm(const RadialMesh& mesh, std::span<const double> field, const KProfile& k,
                        double p);
/// \int |U|^r
double lp_norm_pow(const RadialMesh& mesh, std::span<const double> field, double r);

double hardy_norm_sq(const RadialMesh& mesh, std::span<const double> field, double sigma);

double inner(const RadialMesh& mesh, std::span<const double> a, std::span<const double> b);
double inner_hardy(const RadialMesh& mesh, std::span<const double> a, std::span<const double> b,
                   double sigma);
/// sum_i weights_i a_i b_i
double weighted_inner(std::span<const double> weights, std::span<const double> a,
                      std::span<const double> b);

double l2_sq_norm(const RadialMesh& mesh, std::span<const double> field);
double linf_norm(std::span<const double> field);

/// Samples k at the nodes.
std::vector<double> sample_k(const RadialMesh& mesh, const KProfile& k);

}  // namespace vwlab
