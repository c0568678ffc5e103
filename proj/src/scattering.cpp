#include <cmath>
#include <vector>

#include "mfcn/filter.hpp"
#include "mfcn/net.hpp"
#include "mfcn/scattering.hpp"

namespace mfcn {

Index scattering_feature_length(int J, int Q) {
  if (J < 0 || Q < 1) throw DomainError("scattering needs J >= 0 and Q >= 1");
  return static_cast<Index>(Q) + static_cast<Index>(J + 1) * Q + static_cast<Index>((J + 1) * J / 2) * Q;
}

double empirical_moment(const VectorXd& v, double q) {
  const double n = static_cast<double>(v.size());
  const double s = std::sqrt(n);
  double acc = 0.0;
  for (Index i = 0; i < v.size(); ++i) acc += std::pow(std::abs(s * v(i)), q);
  return acc / n;
}

double empirical_moment(const VectorXd& v, double q, const VectorXd& w) {
  if (w.size() == 0) return empirical_moment(v, q);
  if (w.size() != v.size()) throw ContractError("measure weights do not match signal length");
  const double s = std::sqrt(static_cast<double>(v.size()));
  double acc = 0.0;
  for (Index i = 0; i < v.size(); ++i) acc += w(i) * std::pow(std::abs(s * v(i)), q);
  return acc;
}

namespace {

// Shared assembly once first-order outputs U_j = W_j x are available and a
// second-order operator W_{j'} can be applied to |U_j|.
template <typename ApplyWavelet>
VectorXd assemble(const VectorXd& x, int J, int Q, const VectorXd& weights, ApplyWavelet&& wavelet) {
  VectorXd out(scattering_feature_length(J, Q));
  Index p = 0;
  for (int q = 1; q <= Q; ++q) out(p++) = empirical_moment(x, q, weights);
  std::vector<VectorXd> first;
  for (int j = 0; j <= J; ++j) {
    first.push_back(wavelet(j, x).cwiseAbs());
    for (int q = 1; q <= Q; ++q) out(p++) = empirical_moment(first.back(), q, weights);
  }
  for (int j = 0; j <= J; ++j)
    for (int jp = j + 1; jp <= J; ++jp) {
      const VectorXd u = wavelet(jp, first[static_cast<std::size_t>(j)]);
      for (int q = 1; q <= Q; ++q) out(p++) = empirical_moment(u, q, weights);
    }
  return out;
}

}  // namespace

ScatteringResult scattering_moments(const EigenSystem& es, const VectorXd& x, int J, int Q,
                                    const VectorXd& measure_weights) {
  if (x.size() != es.size()) throw ContractError("signal length does not match eigensystem");
  const auto bank = wavelet_bank(J);
  ScatteringResult r;
  for (const auto& w : bank) r.truncated = r.truncated || filter_truncates(es, w);
  r.features = assemble(x, J, Q, measure_weights, [&](int j, const VectorXd& v) -> VectorXd {
    return apply_filter(es, bank[static_cast<std::size_t>(j)], v);
  });
  return r;
}

VectorXd scattering_moments_approx(const SparseMatrixXd& P, const VectorXd& x, int J, int Q,
                                   const VectorXd& measure_weights) {
  if (x.size() != P.rows()) throw ContractError("signal length does not match walk operator");
  return assemble(x, J, Q, measure_weights, [&](int j, const VectorXd& v) -> VectorXd {
    if (j == 0) return v - P * v;
    const Index t = Index{1} << (j - 1);
    const MatrixXd a = lazy_walk_power(P, t, v);
    const MatrixXd b = lazy_walk_power(P, t, a);
    return a - b;
  });
}

GraphLaplacian walk_matched_laplacian(const GraphLaplacian& L) {
  const double mean_degree = L.degrees().mean();
  if (!(mean_degree > 0.0)) throw DegenerateInputError("walk-matched Laplacian needs edges");
  GraphMeta meta = L.meta();
  meta.scale = 1.0 / (2.0 * mean_degree);
  if (L.is_dense()) return GraphLaplacian(L.dense_weights(), meta);
  return GraphLaplacian(L.sparse_weights(), meta);
}

}  // namespace mfcn
