#pragma once

#include <string>
#include <variant>

#include <Eigen/SparseCore>

#include "mfcn/manifold.hpp"
#include "mfcn/types.hpp"

namespace mfcn {

using SparseMatrixXd = Eigen::SparseMatrix<double>;

enum class GraphFamily { dense_gaussian, epsilon, knn };
enum class KernelKind { indicator, truncated_linear };

std::string to_string(GraphFamily f);
GraphFamily parse_graph_family(const std::string& s);
std::string to_string(KernelKind k);
KernelKind parse_kernel_kind(const std::string& s);

/// Profile eta on [0, inf): nonincreasing, supported on [0, 1], eta(1/2) > 0.
///   indicator         1{t <= 1}
///   truncated_linear  min(1, 2 (1 - t))_+
struct KernelSpec {
  KernelKind kind = KernelKind::indicator;
  double operator()(double t) const;
};

/// c_eta = int_{R^d} |y_1|^2 eta(|y|) dy, d in {1, 2}.
double kernel_constant(const KernelSpec& kernel, int d);

/// Volume of the d-dimensional unit ball.
double unit_ball_volume(int d);

/// Limiting-operator scale mode matching a graph family.
ScaleMode natural_scale_mode(GraphFamily f);

struct GraphMeta {
  GraphFamily family = GraphFamily::dense_gaussian;
  double param = 0.0;  // epsilon, or k for knn
  int intrinsic_dim = 1;
  KernelSpec kernel;
  double scale = 1.0;  // L = scale * (D - W)
  bool disconnected = false;
  Index components = 1;
  Index edges = 0;  // undirected edge count
};

/// L = scale * (D - W) where W holds unscaled kernel weights (zero diagonal).
/// Dense families store W densely; epsilon / knn store sorted symmetric triplets.
class GraphLaplacian {
 public:
  GraphLaplacian() = default;
  GraphLaplacian(MatrixXd weights, GraphMeta meta);
  GraphLaplacian(SparseMatrixXd weights, GraphMeta meta);

  Index size() const { return degree_.size(); }
  bool is_dense() const { return std::holds_alternative<MatrixXd>(weights_); }
  const GraphMeta& meta() const { return meta_; }
  double scale() const { return meta_.scale; }

  const MatrixXd& dense_weights() const { return std::get<MatrixXd>(weights_); }
  const SparseMatrixXd& sparse_weights() const { return std::get<SparseMatrixXd>(weights_); }
  const VectorXd& degrees() const { return degree_; }
  double weight(Index i, Index j) const;

  /// L x.
  MatrixXd apply(const MatrixXd& x) const;
  MatrixXd to_dense() const;
  SparseMatrixXd to_sparse() const;
  /// Unscaled adjacency W as a sparse matrix (for walk operators).
  SparseMatrixXd adjacency() const;

  /// max_i 2 |L_ii|, an upper bound on the spectral radius.
  double gershgorin_bound() const;
  double max_abs_entry() const;

 private:
  std::variant<MatrixXd, SparseMatrixXd> weights_;
  VectorXd degree_;
  GraphMeta meta_;
};

inline constexpr Index kDenseLimit = 4096;

GraphLaplacian build_dense_gaussian(const PointCloud& cloud, double eps, int d);
GraphLaplacian build_epsilon(const PointCloud& cloud, double eps, int d, KernelSpec kernel = {});
GraphLaplacian build_knn(const PointCloud& cloud, Index k, int d, KernelSpec kernel = {});

/// Laplacian scale * (D - W) for an explicit symmetric weight matrix.
GraphLaplacian laplacian_from_weights(const SparseMatrixXd& weights, double scale = 1.0);

/// Schedules: c n^{-2/(d+6)}, c (log n / n)^{1/(d+4)},
/// round(c (log n)^{d/(d+4)} n^{4/(d+4)}) clamped to [2, n-1].
double bandwidth_schedule(GraphFamily family, Index n, int d, double c);

/// Named AUTO constant for a (manifold, family) pair.
double default_bandwidth_constant(ManifoldKind manifold, GraphFamily family);

/// Count connected components of the graph with the given nonzero pattern.
Index count_components(const SparseMatrixXd& adjacency);

}  // namespace mfcn
