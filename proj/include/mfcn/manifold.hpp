#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mfcn/filter.hpp"
#include "mfcn/types.hpp"

namespace mfcn {

enum class ManifoldKind { circle, sphere, flat_torus };
enum class DensityKind { uniform, cosine_tilt };

/// Probability density on the manifold, relative to the normalized volume
/// measure: 1 + a cos(first angular coordinate). For the sphere the first
/// angular coordinate is the polar angle.
struct DensitySpec {
  DensityKind kind = DensityKind::uniform;
  double tilt = 0.0;

  static DensitySpec uniform() { return {}; }
  static DensitySpec cosine(double a);

  double a() const { return kind == DensityKind::cosine_tilt ? tilt : 0.0; }
  bool is_uniform() const { return a() == 0.0; }
  double relative(double first_angle) const;  // density w.r.t. normalized volume
  double max_relative() const { return 1.0 + std::abs(a()); }
  double min_relative() const { return 1.0 - std::abs(a()); }
};

struct ManifoldSpec {
  ManifoldKind kind = ManifoldKind::circle;
  DensitySpec density;

  static ManifoldSpec circle(DensitySpec d = {}) { return {ManifoldKind::circle, d}; }
  static ManifoldSpec sphere(DensitySpec d = {}) { return {ManifoldKind::sphere, d}; }
  static ManifoldSpec torus(DensitySpec d = {}) { return {ManifoldKind::flat_torus, d}; }

  int ambient_dim() const;
  int intrinsic_dim() const;
  /// Riemannian volume (2 pi, 4 pi, 4 pi^2).
  double volume() const;
  /// Density with respect to the Riemannian volume form.
  double density_at(std::span<const double> intrinsic) const;
};

std::string to_string(ManifoldKind k);
ManifoldKind parse_manifold_kind(const std::string& s);
/// "uniform" or "cosine:<a>".
std::string to_string(const DensitySpec& d);
DensitySpec parse_density(const std::string& s);

struct PointCloud {
  RowMatrixXd points;     // n x D ambient coordinates
  RowMatrixXd intrinsic;  // n x d angles
  ManifoldSpec manifold;
  std::uint64_t seed = 0;

  Index size() const { return points.rows(); }
  std::span<const double> angles(Index i) const {
    return {intrinsic.data() + i * intrinsic.cols(), static_cast<std::size_t>(intrinsic.cols())};
  }
};

/// Ambient embedding of intrinsic coordinates.
void embed(ManifoldKind kind, std::span<const double> intrinsic, std::span<double> ambient);

/// n i.i.d. draws from the manifold's density; deterministic in (spec, n, seed).
PointCloud sample_points(const ManifoldSpec& spec, Index n, std::uint64_t seed);

/// Cloud with user-supplied intrinsic coordinates (one row per point).
PointCloud make_cloud(const ManifoldSpec& spec, const RowMatrixXd& intrinsic, std::uint64_t seed = 0);

using ScalarField = std::function<double(std::span<const double>)>;

/// Laplace-Beltrami eigenfunction, orthonormal for the normalized volume
/// measure. Eigenvalues use the -div grad convention (nonnegative).
class EigenFunction {
 public:
  EigenFunction() = default;
  EigenFunction(ManifoldKind kind, int index, double eigenvalue, int f1, int t1, int f2, int t2)
      : kind_(kind), index_(index), eigenvalue_(eigenvalue), f1_(f1), t1_(t1), f2_(f2), t2_(t2) {}

  ManifoldKind kind() const { return kind_; }
  int index() const { return index_; }
  double eigenvalue() const { return eigenvalue_; }
  double operator()(std::span<const double> intrinsic) const;
  ScalarField field() const {
    return [self = *this](std::span<const double> x) { return self(x); };
  }

  // Mode labels. circle: (k, type); sphere: (l, |m|, type); torus: (k, type_k, m, type_m).
  // type: 0 constant / m = 0, 1 cosine, 2 sine.
  int first_frequency() const { return f1_; }
  int first_type() const { return t1_; }
  int second_frequency() const { return f2_; }
  int second_type() const { return t2_; }

 private:
  ManifoldKind kind_ = ManifoldKind::circle;
  int index_ = 1;
  double eigenvalue_ = 0.0;
  int f1_ = 0, t1_ = 0, f2_ = 0, t2_ = 0;
};

/// Number of eigenpairs with an analytic evaluator (circle: unbounded).
int implemented_eigenpairs(ManifoldKind kind);

/// i-th eigenpair (1-based) in ascending eigenvalue order.
EigenFunction manifold_eigenpair(const ManifoldSpec& spec, int i);

/// First `count` eigenpairs.
std::vector<EigenFunction> manifold_basis(const ManifoldSpec& spec, int count);

/// Contiguous groups of equal continuum eigenvalues among the first `count`.
struct IndexRange {
  Index start = 0;
  Index size = 0;
};
std::vector<IndexRange> continuum_clusters(const ManifoldSpec& spec, int count);

enum class ScaleMode { laplace_beltrami, eps_uniform, knn_uniform };
std::string to_string(ScaleMode m);

/// Multiplier mapping Laplace-Beltrami eigenvalues to the limiting operator of
/// a graph family under constant density rho = 1 / vol:
/// 1, rho / 2, rho^{-2/d} / 2.
double scale_factor(const ManifoldSpec& spec, ScaleMode mode);

/// Evaluation operator: entry j is f(x_j) / sqrt(n).
VectorXd evaluate_Pn(const ScalarField& f, const PointCloud& cloud);

template <typename F>
VectorXd evaluate_Pn_with(F&& f, const PointCloud& cloud) {
  const Index n = cloud.size();
  VectorXd out(n);
  const double inv = 1.0 / std::sqrt(static_cast<double>(n));
  for (Index j = 0; j < n; ++j) out(j) = f(cloud.angles(j)) * inv;
  return out;
}

/// Tensor-product quadrature rule whose weights already include the density.
struct QuadratureRule {
  RowMatrixXd nodes;  // m x d intrinsic coordinates
  VectorXd weights;   // sum to 1
};

struct QuadratureResolution {
  int circle_nodes = 2048;
  int sphere_polar = 48;
  int sphere_azimuth = 96;
  int torus_nodes = 128;
};

QuadratureRule quadrature_rule(const ManifoldSpec& spec, const QuadratureResolution& res = {});

/// (integral |g|^q dmu)^{1/q}.
double quadrature(const ManifoldSpec& spec, const ScalarField& g, double q,
                  const QuadratureResolution& res = {});
/// integral g dmu (signed).
double integrate(const ManifoldSpec& spec, const ScalarField& g, const QuadratureResolution& res = {});

/// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int m, VectorXd& nodes, VectorXd& weights);

/// Band-limited function sum_i coeffs(i) phi_{i+1}.
ScalarField bandlimited_field(const ManifoldSpec& spec, const VectorXd& coeffs);

/// sum_i w(scale * lambda_i) coeffs(i) phi_i(point): exact continuum filter output.
double continuum_filter_value(const ManifoldSpec& spec, const FilterSpec& w, const VectorXd& coeffs,
                              std::span<const double> point, double eigen_scale = 1.0);

}  // namespace mfcn
