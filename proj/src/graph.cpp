#include "mfcn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

namespace mfcn {

std::string to_string(GraphFamily f) {
  switch (f) {
    case GraphFamily::dense_gaussian: return "dense";
    case GraphFamily::epsilon: return "epsilon";
    case GraphFamily::knn: return "knn";
  }
  return "?";
}

GraphFamily parse_graph_family(const std::string& s) {
  if (s == "dense" || s == "dense_gaussian" || s == "gaussian") return GraphFamily::dense_gaussian;
  if (s == "epsilon" || s == "eps") return GraphFamily::epsilon;
  if (s == "knn" || s == "kNN") return GraphFamily::knn;
  throw ConfigError("unknown graph family '" + s + "'");
}

std::string to_string(KernelKind k) {
  return k == KernelKind::indicator ? "indicator" : "truncated_linear";
}

KernelKind parse_kernel_kind(const std::string& s) {
  if (s == "indicator") return KernelKind::indicator;
  if (s == "truncated_linear" || s == "linear") return KernelKind::truncated_linear;
  throw ConfigError("unknown kernel '" + s + "'");
}

double KernelSpec::operator()(double t) const {
  if (t < 0.0 || t > 1.0) return 0.0;
  if (kind == KernelKind::indicator) return 1.0;
  return std::min(1.0, 2.0 * (1.0 - t));
}

double unit_ball_volume(int d) {
  switch (d) {
    case 1: return 2.0;
    case 2: return kPi;
    case 3: return 4.0 * kPi / 3.0;
    default: return std::pow(kPi, d / 2.0) / std::tgamma(d / 2.0 + 1.0);
  }
}

namespace {

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double fa,
                        double fm, double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double integrate_1d(const std::function<double(double)>& f, double a, double b, double rel_tol) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  const double scale = std::max(std::abs(whole), 1e-300);
  return adaptive_simpson(f, a, b, fa, fm, fb, whole, rel_tol * scale, 50);
}

}  // namespace

double kernel_constant(const KernelSpec& kernel, int d) {
  if (d < 1 || d > 2) throw DomainError("kernel_constant supports d in {1, 2}");
  if (kernel.kind == KernelKind::indicator) return unit_ball_volume(d) / (d + 2);
  // Radial form: (|S^{d-1}| / d) int_0^1 r^{d+1} eta(r) dr.
  const double sphere_area = d == 1 ? 2.0 : kTwoPi;
  auto radial = [&](double r) { return std::pow(r, d + 1) * kernel(r); };
  // Split at the kink so each piece is smooth.
  const double tol = 1e-12;
  const double s = integrate_1d(radial, 0.0, 0.5, tol) + integrate_1d(radial, 0.5, 1.0, tol);
  return sphere_area / d * s;
}

ScaleMode natural_scale_mode(GraphFamily f) {
  switch (f) {
    case GraphFamily::dense_gaussian: return ScaleMode::laplace_beltrami;
    case GraphFamily::epsilon: return ScaleMode::eps_uniform;
    case GraphFamily::knn: return ScaleMode::knn_uniform;
  }
  return ScaleMode::laplace_beltrami;
}

// ---------------------------------------------------------------------------

GraphLaplacian::GraphLaplacian(MatrixXd weights, GraphMeta meta) : meta_(meta) {
  weights.diagonal().setZero();
  degree_ = weights.rowwise().sum();
  weights_ = std::move(weights);
}

GraphLaplacian::GraphLaplacian(SparseMatrixXd weights, GraphMeta meta) : meta_(meta) {
  weights.prune([](Index r, Index c, double v) { return r != c && v != 0.0; });
  weights.makeCompressed();
  degree_ = VectorXd::Zero(weights.rows());
  for (Index c = 0; c < weights.outerSize(); ++c)
    for (SparseMatrixXd::InnerIterator it(weights, c); it; ++it) degree_(it.row()) += it.value();
  weights_ = std::move(weights);
}

double GraphLaplacian::weight(Index i, Index j) const {
  if (is_dense()) return dense_weights()(i, j);
  return sparse_weights().coeff(i, j);
}

MatrixXd GraphLaplacian::apply(const MatrixXd& x) const {
  MatrixXd out = degree_.asDiagonal() * x;
  if (is_dense())
    out.noalias() -= dense_weights() * x;
  else
    out.noalias() -= sparse_weights() * x;
  return meta_.scale * out;
}

MatrixXd GraphLaplacian::to_dense() const {
  MatrixXd L = is_dense() ? MatrixXd(-dense_weights()) : MatrixXd(-MatrixXd(sparse_weights()));
  L.diagonal() += degree_;
  return meta_.scale * L;
}

SparseMatrixXd GraphLaplacian::to_sparse() const {
  SparseMatrixXd W = adjacency();
  SparseMatrixXd D(size(), size());
  D.reserve(Eigen::VectorXi::Constant(size(), 1));
  for (Index i = 0; i < size(); ++i) D.insert(i, i) = degree_(i);
  SparseMatrixXd L = meta_.scale * (D - W);
  L.makeCompressed();
  return L;
}

SparseMatrixXd GraphLaplacian::adjacency() const {
  if (!is_dense()) return sparse_weights();
  return dense_weights().sparseView();
}

double GraphLaplacian::gershgorin_bound() const {
  return degree_.size() ? 2.0 * std::abs(meta_.scale) * degree_.cwiseAbs().maxCoeff() : 0.0;
}

double GraphLaplacian::max_abs_entry() const {
  double m = degree_.size() ? degree_.cwiseAbs().maxCoeff() : 0.0;
  if (is_dense())
    m = std::max(m, dense_weights().cwiseAbs().maxCoeff());
  else
    for (Index c = 0; c < sparse_weights().outerSize(); ++c)
      for (SparseMatrixXd::InnerIterator it(sparse_weights(), c); it; ++it)
        m = std::max(m, std::abs(it.value()));
  return std::abs(meta_.scale) * m;
}

// ---------------------------------------------------------------------------

namespace {

struct DisjointSets {
  std::vector<Index> parent;
  explicit DisjointSets(Index n) : parent(static_cast<std::size_t>(n)) {
    std::iota(parent.begin(), parent.end(), Index{0});
  }
  Index find(Index x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      auto& p = parent[static_cast<std::size_t>(x)];
      p = parent[static_cast<std::size_t>(p)];
      x = p;
    }
    return x;
  }
  void unite(Index a, Index b) { parent[static_cast<std::size_t>(find(a))] = find(b); }
  Index count() {
    Index c = 0;
    for (std::size_t i = 0; i < parent.size(); ++i) c += find(static_cast<Index>(i)) == static_cast<Index>(i);
    return c;
  }
};

double squared_distance(const PointCloud& cloud, Index i, Index j) {
  return (cloud.points.row(i) - cloud.points.row(j)).squaredNorm();
}

void finish_meta(GraphMeta& meta, const SparseMatrixXd& W) {
  meta.components = count_components(W);
  meta.disconnected = meta.components > 1;
  meta.edges = W.nonZeros() / 2;
}

}  // namespace

Index count_components(const SparseMatrixXd& adjacency) {
  DisjointSets sets(adjacency.rows());
  for (Index c = 0; c < adjacency.outerSize(); ++c)
    for (SparseMatrixXd::InnerIterator it(adjacency, c); it; ++it)
      if (it.value() != 0.0) sets.unite(it.row(), it.col());
  return sets.count();
}

GraphLaplacian build_dense_gaussian(const PointCloud& cloud, double eps, int d) {
  const Index n = cloud.size();
  if (n < 2) throw DegenerateInputError("dense Gaussian graph needs at least two points");
  if (!(eps > 0.0)) throw ConfigError("dense Gaussian bandwidth must be > 0");
  if (n > kDenseLimit) throw ConfigError("dense Gaussian graph limited to n <= 4096");

  MatrixXd W(n, n);
  DisjointSets sets(n);
  for (Index j = 0; j < n; ++j) {
    W(j, j) = 0.0;
    for (Index i = j + 1; i < n; ++i) {
      const double w = std::exp(-squared_distance(cloud, i, j) / eps);
      W(i, j) = w;
      W(j, i) = w;
      if (w > 0.0) sets.unite(i, j);
    }
  }
  GraphMeta meta;
  meta.family = GraphFamily::dense_gaussian;
  meta.param = eps;
  meta.intrinsic_dim = d;
  meta.scale = 1.0 / (static_cast<double>(n) * std::pow(eps, 1.0 + d / 2.0));
  meta.components = sets.count();
  meta.disconnected = meta.components > 1;
  meta.edges = n * (n - 1) / 2;
  return GraphLaplacian(std::move(W), meta);
}

GraphLaplacian build_epsilon(const PointCloud& cloud, double eps, int d, KernelSpec kernel) {
  const Index n = cloud.size();
  if (!(eps > 0.0)) throw ConfigError("epsilon-graph radius must be > 0");
  std::vector<Eigen::Triplet<double>> trips;
  const double eps2 = eps * eps;
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) {
      const double r2 = squared_distance(cloud, i, j);
      if (r2 > eps2) continue;
      const double w = kernel(std::sqrt(r2) / eps);
      if (w == 0.0) continue;
      trips.emplace_back(i, j, w);
      trips.emplace_back(j, i, w);
    }
  SparseMatrixXd W(n, n);
  W.setFromTriplets(trips.begin(), trips.end());
  GraphMeta meta;
  meta.family = GraphFamily::epsilon;
  meta.param = eps;
  meta.intrinsic_dim = d;
  meta.kernel = kernel;
  meta.scale = kernel_constant(kernel, d) / (static_cast<double>(n) * std::pow(eps, d + 2.0));
  finish_meta(meta, W);
  return GraphLaplacian(std::move(W), meta);
}

GraphLaplacian build_knn(const PointCloud& cloud, Index k, int d, KernelSpec kernel) {
  const Index n = cloud.size();
  if (k < 1 || k >= n) throw RangeError("k-NN graph requires 1 <= k < n");

  // Neighbor lists ordered by (distance, index) so ties resolve deterministically.
  std::vector<std::vector<Index>> nbrs(static_cast<std::size_t>(n));
  VectorXd kth(n);
  std::vector<std::pair<double, Index>> row(static_cast<std::size_t>(n - 1));
  for (Index i = 0; i < n; ++i) {
    std::size_t r = 0;
    for (Index j = 0; j < n; ++j)
      if (j != i) row[r++] = {squared_distance(cloud, i, j), j};
    std::nth_element(row.begin(), row.begin() + (k - 1), row.end());
    std::sort(row.begin(), row.begin() + k);
    auto& out = nbrs[static_cast<std::size_t>(i)];
    for (Index q = 0; q < k; ++q) out.push_back(row[static_cast<std::size_t>(q)].second);
    kth(i) = std::sqrt(row[static_cast<std::size_t>(k - 1)].first);
  }

  std::vector<Eigen::Triplet<double>> trips;
  for (Index i = 0; i < n; ++i)
    for (Index j : nbrs[static_cast<std::size_t>(i)]) {
      // Emit each undirected edge once: from the lower index, or from j's side
      // only when i is not also in j's list.
      const auto& back = nbrs[static_cast<std::size_t>(j)];
      const bool mutual = std::find(back.begin(), back.end(), i) != back.end();
      if (mutual && j < i) continue;
      const double dist = std::sqrt(squared_distance(cloud, i, j));
      const double rk = std::max(kth(i), kth(j));
      const double w = kernel(rk > 0.0 ? dist / rk : 0.0);
      if (w == 0.0) continue;
      trips.emplace_back(i, j, w);
      trips.emplace_back(j, i, w);
    }
  SparseMatrixXd W(n, n);
  W.setFromTriplets(trips.begin(), trips.end());

  GraphMeta meta;
  meta.family = GraphFamily::knn;
  meta.param = static_cast<double>(k);
  meta.intrinsic_dim = d;
  meta.kernel = kernel;
  const double nd = static_cast<double>(n);
  meta.scale = kernel_constant(kernel, d) / nd *
               std::pow(nd * unit_ball_volume(d) / static_cast<double>(k), 1.0 + 2.0 / d);
  finish_meta(meta, W);
  return GraphLaplacian(std::move(W), meta);
}

GraphLaplacian laplacian_from_weights(const SparseMatrixXd& weights, double scale) {
  if (weights.rows() != weights.cols()) throw ContractError("weight matrix must be square");
  GraphMeta meta;
  meta.scale = scale;
  meta.family = GraphFamily::epsilon;
  finish_meta(meta, weights);
  return GraphLaplacian(SparseMatrixXd(weights), meta);
}

double bandwidth_schedule(GraphFamily family, Index n, int d, double c) {
  if (n < 2) throw ConfigError("bandwidth_schedule requires n >= 2");
  const double nd = static_cast<double>(n);
  switch (family) {
    case GraphFamily::dense_gaussian:
      return c * std::pow(nd, -2.0 / (d + 6.0));
    case GraphFamily::epsilon:
      return c * std::pow(std::log(nd) / nd, 1.0 / (d + 4.0));
    case GraphFamily::knn: {
      const double k = std::round(c * std::pow(std::log(nd), d / (d + 4.0)) * std::pow(nd, 4.0 / (d + 4.0)));
      return std::min(std::max(k, 2.0), nd - 1.0);
    }
  }
  return c;
}

double default_bandwidth_constant(ManifoldKind manifold, GraphFamily family) {
  (void)manifold;
  switch (family) {
    case GraphFamily::dense_gaussian: return 1.0;
    case GraphFamily::epsilon: return 2.0;
    case GraphFamily::knn: return 0.5;
  }
  return 1.0;
}

}  // namespace mfcn
