#include <doctest.h>

#include <cmath>

#include <Eigen/Eigenvalues>

#include "mfcn/graph.hpp"
#include "mfcn/manifold.hpp"

using namespace mfcn;

namespace {

PointCloud ring4() {
  RowMatrixXd a(4, 1);
  a << 0.0, kPi / 2, kPi, 3 * kPi / 2;
  return make_cloud(ManifoldSpec::circle(), a);
}

PointCloud ambient_cloud(const RowMatrixXd& pts) {
  PointCloud c;
  c.manifold = ManifoldSpec::circle();
  c.points = pts;
  c.intrinsic = RowMatrixXd::Zero(pts.rows(), 1);
  return c;
}

VectorXd sorted_eigs(const MatrixXd& m) { return Eigen::SelfAdjointEigenSolver<MatrixXd>(m).eigenvalues(); }

}  // namespace

TEST_CASE("dense Gaussian on two points at distance 2") {
  RowMatrixXd p(2, 2);
  p << -1, 0, 1, 0;
  const GraphLaplacian L = build_dense_gaussian(ambient_cloud(p), 1.0, 1);
  const double w = std::exp(-4.0) / 2.0;
  CHECK(w == doctest::Approx(0.00915782).epsilon(1e-6));
  const MatrixXd M = L.to_dense();
  CHECK(M(0, 1) == doctest::Approx(-w).epsilon(1e-14));
  const VectorXd ev = sorted_eigs(M);
  CHECK(std::abs(ev(0)) < 1e-15);
  CHECK(ev(1) == doctest::Approx(2 * w).epsilon(1e-13));
}

TEST_CASE("Laplacian rows sum to zero") {
  const PointCloud c = sample_points(ManifoldSpec::sphere(), 300, 4);
  for (const GraphLaplacian& L : {build_dense_gaussian(c, 0.3, 2), build_epsilon(c, 0.4, 2), build_knn(c, 12, 2)})
    CHECK(L.apply(VectorXd::Ones(300)).cwiseAbs().maxCoeff() < 1e-10 * L.max_abs_entry() * 300);
}

TEST_CASE("coincident points give finite unit kernel weights") {
  RowMatrixXd p(2, 2);
  p << 1, 0, 1, 0;
  const GraphLaplacian L = build_dense_gaussian(ambient_cloud(p), 0.5, 1);
  CHECK(std::isfinite(L.to_dense()(0, 1)));
  CHECK(-L.to_dense()(0, 1) == doctest::Approx(1.0 / (2 * std::pow(0.5, 1.5))));
}

TEST_CASE("epsilon graph on the 4-ring") {
  const GraphLaplacian L = build_epsilon(ring4(), 1.5, 1);
  CHECK(L.scale() == doctest::Approx((2.0 / 3.0) / (4 * std::pow(1.5, 3))).epsilon(1e-14));
  CHECK(L.scale() == doctest::Approx(0.0493827).epsilon(1e-6));
  const VectorXd unscaled = sorted_eigs(L.to_dense() / L.scale());
  // circulant oracle 2 - 2 cos(2 pi k / 4)
  VectorXd circ(4);
  for (int k = 0; k < 4; ++k) circ(k) = 2 - 2 * std::cos(kTwoPi * k / 4);
  std::sort(circ.data(), circ.data() + 4);
  CHECK((unscaled - circ).cwiseAbs().maxCoeff() < 1e-12);
  const VectorXd ev = sorted_eigs(L.to_dense());
  CHECK(ev(1) == doctest::Approx(0.0987654).epsilon(1e-6));
  CHECK(ev(3) == doctest::Approx(0.1975309).epsilon(1e-6));
  CHECK_FALSE(L.meta().disconnected);
}

TEST_CASE("tiny epsilon gives the empty graph") {
  const GraphLaplacian L = build_epsilon(ring4(), 0.5, 1);
  CHECK(L.to_dense().isZero());
  CHECK(L.meta().disconnected);
  CHECK(L.meta().components == 4);
}

TEST_CASE("symmetric kNN adds the reverse edge") {
  RowMatrixXd p(3, 2);
  p << 0, 0, 1, 0, 3, 0;
  const GraphLaplacian L = build_knn(ambient_cloud(p), 1, 1);
  const MatrixXd M = L.to_dense();
  CHECK(M(0, 1) != 0.0);
  CHECK(M(1, 2) != 0.0);
  CHECK(M(0, 2) == 0.0);
  CHECK(L.meta().edges == 2);
}

TEST_CASE("bandwidth schedules") {
  CHECK(bandwidth_schedule(GraphFamily::dense_gaussian, 128, 1, 1.0) == doctest::Approx(0.24992).epsilon(1e-4));
  CHECK(std::pow(128.0, -2.0 / 7.0) == doctest::Approx(bandwidth_schedule(GraphFamily::dense_gaussian, 128, 1, 1.0)));
  CHECK(bandwidth_schedule(GraphFamily::knn, 50, 1, 1e6) == 49.0);
  // epsilon schedule at log n = 1 is not reachable with integer n; check the formula directly
  const double n = 1000;
  CHECK(bandwidth_schedule(GraphFamily::epsilon, 1000, 1, 1.0) == doctest::Approx(std::pow(std::log(n) / n, 0.2)));
  CHECK(std::pow(1.0 / std::exp(1.0), 0.2) == doctest::Approx(0.81873).epsilon(1e-5));
}

TEST_CASE("kernel constants") {
  CHECK(kernel_constant({KernelKind::indicator}, 1) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(kernel_constant({KernelKind::indicator}, 2) == doctest::Approx(kPi / 4).epsilon(1e-14));
  // truncated linear eta = min(1, 2(1 - t)), d = 1: antiderivative pieces
  // 2 [ y^3/3 on [0, 1/2] + 2 (y^3/3 - y^4/4) on [1/2, 1] ]
  auto F = [](double y) { return 2.0 * (y * y * y / 3.0 - y * y * y * y / 4.0); };
  const double closed = 2.0 * (0.125 / 3.0 + F(1.0) - F(0.5));
  CHECK(closed == doctest::Approx(5.0 / 16.0).epsilon(1e-14));
  CHECK(kernel_constant({KernelKind::truncated_linear}, 1) == doctest::Approx(closed).epsilon(1e-10));
}

TEST_CASE("graph construction rejects bad parameters") {
  const PointCloud c = ring4();
  CHECK_THROWS(build_epsilon(c, -1.0, 1));
  CHECK_THROWS(build_dense_gaussian(c, 0.0, 1));
  CHECK_THROWS(build_knn(c, 0, 1));
}
