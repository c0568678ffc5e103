#pragma once

#include <random>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "mfcn/graph.hpp"
#include "mfcn/manifold.hpp"
#include "mfcn/net.hpp"
#include "mfcn/spectral.hpp"

namespace mfcn::testing {

/// Largest principal angle between the column spans of orthonormal A and B.
inline double max_principal_angle(const MatrixXd& A, const MatrixXd& B) {
  const MatrixXd R = B - A * (A.transpose() * B);
  const double s = Eigen::JacobiSVD<MatrixXd>(R).singularValues()(0);
  return std::asin(std::min(1.0, s));
}

/// Equispaced points on the unit circle, starting at angle 0.
inline PointCloud equispaced_circle(Index n) {
  RowMatrixXd a(n, 1);
  for (Index i = 0; i < n; ++i) a(i, 0) = kTwoPi * double(i) / double(n);
  return make_cloud(ManifoldSpec::circle(), a);
}

/// Random sparse graph with Erdos-Renyi edges and positive weights, plus a ring
/// so it stays connected.
inline GraphLaplacian random_sparse_graph(Index n, double p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Eigen::Triplet<double>> t;
  for (Index i = 0; i < n; ++i) {
    const Index j = (i + 1) % n;
    const double w = 0.5 + u(rng);
    t.emplace_back(i, j, w);
    t.emplace_back(j, i, w);
    for (Index k = i + 2; k < n; ++k) {
      if (k == n - 1 && i == 0) continue;
      if (u(rng) < p) {
        const double wk = u(rng);
        t.emplace_back(i, k, wk);
        t.emplace_back(k, i, wk);
      }
    }
  }
  SparseMatrixXd W(n, n);
  W.setFromTriplets(t.begin(), t.end());
  return laplacian_from_weights(W, 1.0);
}

inline MatrixXd random_matrix(Index r, Index c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  MatrixXd m(r, c);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

inline MatrixXd random_orthogonal(Index n, std::mt19937_64& rng) {
  Eigen::HouseholderQR<MatrixXd> qr(random_matrix(n, n, rng));
  return qr.householderQ();
}

}  // namespace mfcn::testing
