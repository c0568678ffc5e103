#pragma once

#include <Eigen/SparseCore>

#include "mfcn/graph.hpp"
#include "mfcn/spectral.hpp"
#include "mfcn/types.hpp"

namespace mfcn {

/// Number of moments for orders 0, 1, 2: Q + (J+1) Q + (J+1) J / 2 Q.
Index scattering_feature_length(int J, int Q);

/// Moments of a P_n-scaled vector: (1/n) sum_i |sqrt(n) v(i)|^q, or with
/// explicit measure weights sum_i m_i |sqrt(n) v(i)|^q.
double empirical_moment(const VectorXd& v, double q);
double empirical_moment(const VectorXd& v, double q, const VectorXd& measure_weights);

struct ScatteringResult {
  VectorXd features;
  bool truncated = false;
};

/// Feature order:
///   S[q]            q = 1..Q
///   S[j, q]         j = 0..J, then q
///   S[j, j', q]     0 <= j < j' <= J lexicographic, then q
/// Wavelets are the spectral bank w_0..w_J.
ScatteringResult scattering_moments(const EigenSystem& es, const VectorXd& x, int J, int Q,
                                    const VectorXd& measure_weights = {});

/// Same moments with W_0 = I - P, W_j = P^{2^{j-1}} - P^{2^j}, P the lazy walk.
VectorXd scattering_moments_approx(const SparseMatrixXd& P, const VectorXd& x, int J, int Q,
                                   const VectorXd& measure_weights = {});

/// Symmetric Laplacian (D - W) / (2 mean degree) whose heat semigroup matches
/// the lazy walk on near-regular graphs.
GraphLaplacian walk_matched_laplacian(const GraphLaplacian& L);

}  // namespace mfcn
