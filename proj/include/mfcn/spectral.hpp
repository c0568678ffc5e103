#pragma once

#include <cstdint>
#include <vector>

#include "mfcn/filter.hpp"
#include "mfcn/graph.hpp"
#include "mfcn/types.hpp"

namespace mfcn {

/// Ascending eigenvalues and l2-orthonormal eigenvectors (columns).
struct EigenSystem {
  VectorXd values;
  MatrixXd vectors;  // n x kappa
  bool complete = false;
  double residual_max = 0.0;

  Index size() const { return vectors.rows(); }
  Index count() const { return values.size(); }
  EigenSystem leading(Index kappa) const;
};

/// Eigenvalues within max(1e-8, 1e-6 lambda) of their neighbour share a cluster.
std::vector<IndexRange> spectral_clusters(const VectorXd& ascending_values, double abs_tol = 1e-8,
                                          double rel_tol = 1e-6);

/// max_i || L v_i - lambda_i v_i ||_2.
double max_residual(const GraphLaplacian& L, const EigenSystem& es);
double max_residual(const MatrixXd& L, const EigenSystem& es);

/// Full spectrum of a symmetric matrix (Householder tridiagonalization +
/// implicit-shift QR through Eigen's self-adjoint solver).
EigenSystem eig_dense_sym(const MatrixXd& L);
EigenSystem eig_dense_sym(const GraphLaplacian& L);

struct PartialEigOptions {
  Index block = 8;
  Index max_basis = 480;   // Krylov basis size before a thick restart
  int max_restarts = 40;
  double tol = 1e-9;       // residual target relative to max(1, lambda_kappa)
  std::uint64_t seed = 0x9e3779b97f4a7c15ULL;
  bool dense_fallback = true;
};

/// Smallest kappa eigenpairs by block Lanczos with full reorthogonalization and
/// Rayleigh-Ritz extraction; degenerate clusters come back as an orthonormal
/// basis of the cluster subspace. Falls back to the dense solver if the
/// iteration stalls and n <= 4096.
EigenSystem eig_partial(const GraphLaplacian& L, Index kappa, const PartialEigOptions& opt = {});

/// x_hat(i) = <x, phi_i>.
template <typename Derived>
VectorXd graph_fourier(const EigenSystem& es, const Eigen::MatrixBase<Derived>& x) {
  if (x.rows() != es.size()) throw ContractError("signal length does not match eigensystem");
  return es.vectors.transpose() * x;
}

/// True when filtering through a partial eigensystem drops spectrum that w
/// does not annihilate.
bool filter_truncates(const EigenSystem& es, const FilterSpec& w);

/// sum_i w(lambda_i) x_hat(i) phi_i; columns of x are filtered independently.
template <typename Derived>
MatrixXd apply_filter(const EigenSystem& es, const FilterSpec& w, const Eigen::MatrixBase<Derived>& x) {
  if (x.rows() != es.size()) throw ContractError("signal length does not match eigensystem");
  const VectorXd gain = w.response(es.values);
  return es.vectors * (gain.asDiagonal() * (es.vectors.transpose() * x));
}

struct FilteredSignal {
  VectorXd signal;
  bool truncated = false;
};

FilteredSignal apply_filter_checked(const EigenSystem& es, const FilterSpec& w, const VectorXd& x);

}  // namespace mfcn
