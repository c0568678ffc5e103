#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "mfcn/filter.hpp"
#include "mfcn/spectral.hpp"
#include "mfcn/types.hpp"

namespace mfcn {

enum class Activation { relu, abs, identity };

std::string to_string(Activation a);
Activation parse_activation(const std::string& s);

inline double activate(Activation a, double x) {
  switch (a) {
    case Activation::relu: return x > 0.0 ? x : 0.0;
    case Activation::abs: return std::abs(x);
    case Activation::identity: return x;
  }
  return x;
}

template <typename Derived>
MatrixXd activate(Activation a, const Eigen::MatrixBase<Derived>& x) {
  switch (a) {
    case Activation::relu: return x.cwiseMax(0.0);
    case Activation::abs: return x.cwiseAbs();
    case Activation::identity: return x;
  }
  return x;
}

/// One filter-combine layer.
///   filtering   x~_{j,k} = W_{j,k} x_k           j < J, k < C
///   combine     y_{j,k}  = sum_i x~_{j,i} theta^{(j)}_{i,k}   k < C'
///   cross       y~_{j,k} = sum_i alpha^{(k)}_{j,i} y_{i,k}    j < J'
///   activation  z = sigma(y~)
///   reshape     out column j C' + k = z_{j,k}
struct LayerSpec {
  Index in_channels = 1;    // C
  Index num_filters = 1;    // J
  Index combine_width = 1;  // C'
  Index cross_width = 1;    // J'
  std::vector<FilterSpec> filters;  // J (shared bank) or J*C, entry j*C + k
  std::vector<MatrixXd> theta;      // J matrices, C x C'
  std::vector<MatrixXd> alpha;      // C' matrices, J' x J
  Activation activation = Activation::relu;

  bool shared_bank() const { return static_cast<Index>(filters.size()) == num_filters; }
  const FilterSpec& filter(Index j, Index k) const;
  Index output_channels() const { return cross_width * combine_width; }
  /// Throws ContractError naming the first violated shape rule.
  void validate() const;
};

struct NetworkSpec {
  Index input_channels = 1;
  std::vector<LayerSpec> layers;

  Index output_channels() const;
  void validate() const;
};

/// Filter operator hook: returns W_{j,k} x for one column x.
using FilterOperator = std::function<VectorXd(Index j, Index k, const VectorXd& x)>;

/// Per-step maps. Blocks are indexed by filter (j); each block is n x channels.
std::vector<MatrixXd> filter_step(const LayerSpec& layer, const FilterOperator& op, const MatrixXd& X);
std::vector<MatrixXd> combine_step(const LayerSpec& layer, const std::vector<MatrixXd>& filtered);
std::vector<MatrixXd> cross_step(const LayerSpec& layer, const std::vector<MatrixXd>& combined);
std::vector<MatrixXd> activation_step(const LayerSpec& layer, const std::vector<MatrixXd>& crossed);
MatrixXd reshape_step(const LayerSpec& layer, const std::vector<MatrixXd>& activated);

/// Output column of (j, k) after reshaping.
inline Index reshape_index(Index j, Index k, Index combine_width) { return j * combine_width + k; }

MatrixXd layer_forward(const LayerSpec& layer, const FilterOperator& op, const MatrixXd& X);
MatrixXd layer_forward(const LayerSpec& layer, const EigenSystem& es, const MatrixXd& X);

/// Per-layer operator factory: op(layer_index) -> FilterOperator.
using LayerOperatorFactory = std::function<FilterOperator(std::size_t)>;

MatrixXd network_forward(const NetworkSpec& net, const LayerOperatorFactory& ops, const MatrixXd& X);
MatrixXd network_forward(const NetworkSpec& net, const EigenSystem& es, const MatrixXd& X);

struct WeightSums {
  double a1 = 0.0;
  double a2 = 0.0;
};

/// A1 = max_{j,k} sum_i |theta^{(j)}_{i,k}|, A2 = max_{j,k} sum_i |alpha^{(k)}_{j,i}|.
WeightSums weight_sums(const LayerSpec& layer);

/// sum_{i < l} prod_{j = i}^{l-1} A1^{(j)} A2^{(j)} eps_i.
double composed_error_bound(const std::vector<double>& a1, const std::vector<double>& a2,
                            const std::vector<double>& eps);

struct FilterBound {
  double value = 0.0;
  bool lipschitz_ok = false;  // A_Lip alpha <= 1
  bool beta_ok = false;       // beta <= 1
  bool gamma_ok = false;      // gamma max_i ||phi_i||_4 <= 1
  bool hypotheses_hold() const { return lipschitz_ok && beta_ok && gamma_ok; }
};

/// 6 kappa ((A_Lip alpha + beta) ||f||_2 + gamma ||f||_4).
double filter_error_bound(Index kappa, double a_lip, double alpha, double beta, double gamma, double norm2_f,
                          double norm4_f);
FilterBound filter_error_bound_checked(Index kappa, double a_lip, double alpha, double beta, double gamma,
                                       double norm2_f, double norm4_f, double max_phi_norm4);

/// A^ = (D + I)^{-1/2} (A + I) (D + I)^{-1/2}.
SparseMatrixXd renormalized_adjacency(const SparseMatrixXd& A);

/// X <- relu(A^ X Theta) for each Theta in turn.
MatrixXd mcn_forward(const SparseMatrixXd& A, const MatrixXd& X, const std::vector<MatrixXd>& thetas);

/// P = (I + A D^{-1}) / 2; columns of zero-degree vertices of A D^{-1} are 0.
SparseMatrixXd lazy_walk(const SparseMatrixXd& A);
MatrixXd lazy_walk_power(const SparseMatrixXd& P, Index t, const MatrixXd& x);

// Architecture factories. Combine and cross-channel steps default to identity.

/// Different filters along each channel: C' = 1, theta = 1, alpha = I.
LayerSpec per_channel_layer(Index channels, std::vector<FilterSpec> filters_jk, Index num_filters,
                            Activation act = Activation::relu);
/// Shared bank with a combine matrix shared across filters.
LayerSpec shared_bank_layer(std::vector<FilterSpec> bank, const MatrixXd& theta, Activation act = Activation::relu);
/// Single shared low-pass filter with a learnable combine (J = J' = 1).
LayerSpec mcn_layer(const FilterSpec& lowpass, const MatrixXd& theta, Activation act = Activation::relu);
/// Wavelet bank w_0..w_J, identity combine and cross, modulus activation.
LayerSpec scattering_layer(Index channels, int J);
/// Diffusion bank e^{-j lambda}, j = 0..J, with supplied cross-channel matrices.
LayerSpec learnable_scattering_layer(Index channels, int J, std::vector<MatrixXd> alpha,
                                     Activation act = Activation::abs);
/// Identity filter, dense combine.
LayerSpec mlp_layer(const MatrixXd& theta, Activation act = Activation::relu);

/// Widths 16 and 32 with a DLF-POLY style filter bank of size J.
NetworkSpec default_dlf_network(Index input_channels, const MatrixXd& poly_coeffs, std::uint64_t seed);

}  // namespace mfcn
