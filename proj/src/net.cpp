#include <algorithm>
#include <random>

#include "mfcn/net.hpp"

namespace mfcn {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::abs: return "abs";
    case Activation::identity: return "identity";
  }
  return "identity";
}

Activation parse_activation(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "abs") return Activation::abs;
  if (s == "identity") return Activation::identity;
  throw ConfigError("unknown activation '" + s + "' (expected relu, abs, identity)");
}

const FilterSpec& LayerSpec::filter(Index j, Index k) const {
  if (shared_bank()) return filters.at(static_cast<std::size_t>(j));
  return filters.at(static_cast<std::size_t>(j * in_channels + k));
}

void LayerSpec::validate() const {
  if (in_channels < 1 || num_filters < 1 || combine_width < 1 || cross_width < 1)
    throw ContractError("layer widths must be positive");
  const auto nf = static_cast<Index>(filters.size());
  if (nf != num_filters && nf != num_filters * in_channels)
    throw ContractError("layer filter table must hold J or J*C entries");
  if (static_cast<Index>(theta.size()) != num_filters)
    throw ContractError("layer needs one combine matrix per filter");
  for (const auto& t : theta)
    if (t.rows() != in_channels || t.cols() != combine_width)
      throw ContractError("combine matrix must be C x C'");
  if (static_cast<Index>(alpha.size()) != combine_width)
    throw ContractError("layer needs one cross-channel matrix per combined channel");
  for (const auto& a : alpha)
    if (a.rows() != cross_width || a.cols() != num_filters)
      throw ContractError("cross-channel matrix must be J' x J");
}

Index NetworkSpec::output_channels() const {
  return layers.empty() ? input_channels : layers.back().output_channels();
}

void NetworkSpec::validate() const {
  Index c = input_channels;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    layers[l].validate();
    if (layers[l].in_channels != c)
      throw ContractError("layer " + std::to_string(l) + " expects " + std::to_string(layers[l].in_channels) +
                          " channels but receives " + std::to_string(c));
    c = layers[l].output_channels();
  }
}

std::vector<MatrixXd> filter_step(const LayerSpec& layer, const FilterOperator& op, const MatrixXd& X) {
  if (X.cols() != layer.in_channels) throw ContractError("input has wrong channel count for layer");
  std::vector<MatrixXd> out(static_cast<std::size_t>(layer.num_filters), MatrixXd(X.rows(), X.cols()));
  for (Index j = 0; j < layer.num_filters; ++j)
    for (Index k = 0; k < X.cols(); ++k) {
      VectorXd y = op(j, k, X.col(k));
      if (y.size() != X.rows()) throw ContractError("filter operator changed signal length");
      out[static_cast<std::size_t>(j)].col(k) = y;
    }
  return out;
}

std::vector<MatrixXd> combine_step(const LayerSpec& layer, const std::vector<MatrixXd>& filtered) {
  std::vector<MatrixXd> out(filtered.size());
  for (std::size_t j = 0; j < filtered.size(); ++j) out[j] = filtered[j] * layer.theta[j];
  return out;
}

std::vector<MatrixXd> cross_step(const LayerSpec& layer, const std::vector<MatrixXd>& combined) {
  const Index n = combined.empty() ? 0 : combined.front().rows();
  std::vector<MatrixXd> out(static_cast<std::size_t>(layer.cross_width),
                            MatrixXd::Zero(n, layer.combine_width));
  for (Index k = 0; k < layer.combine_width; ++k) {
    const MatrixXd& a = layer.alpha[static_cast<std::size_t>(k)];
    for (Index jp = 0; jp < layer.cross_width; ++jp)
      for (Index i = 0; i < layer.num_filters; ++i)
        if (a(jp, i) != 0.0) out[static_cast<std::size_t>(jp)].col(k) += a(jp, i) * combined[static_cast<std::size_t>(i)].col(k);
  }
  return out;
}

std::vector<MatrixXd> activation_step(const LayerSpec& layer, const std::vector<MatrixXd>& crossed) {
  std::vector<MatrixXd> out(crossed.size());
  for (std::size_t j = 0; j < crossed.size(); ++j) out[j] = activate(layer.activation, crossed[j]);
  return out;
}

MatrixXd reshape_step(const LayerSpec& layer, const std::vector<MatrixXd>& z) {
  const Index n = z.empty() ? 0 : z.front().rows();
  MatrixXd out(n, layer.output_channels());
  for (Index j = 0; j < layer.cross_width; ++j)
    for (Index k = 0; k < layer.combine_width; ++k)
      out.col(reshape_index(j, k, layer.combine_width)) = z[static_cast<std::size_t>(j)].col(k);
  return out;
}

MatrixXd layer_forward(const LayerSpec& layer, const FilterOperator& op, const MatrixXd& X) {
  layer.validate();
  auto filtered = filter_step(layer, op, X);
  auto combined = combine_step(layer, filtered);
  auto crossed = cross_step(layer, combined);
  auto activated = activation_step(layer, crossed);
  return reshape_step(layer, activated);
}

namespace {

FilterOperator spectral_operator(const LayerSpec& layer, const EigenSystem& es) {
  return [&layer, &es](Index j, Index k, const VectorXd& x) -> VectorXd {
    return apply_filter(es, layer.filter(j, k), x);
  };
}

}  // namespace

MatrixXd layer_forward(const LayerSpec& layer, const EigenSystem& es, const MatrixXd& X) {
  if (X.rows() != es.size()) throw ContractError("feature rows do not match eigensystem size");
  return layer_forward(layer, spectral_operator(layer, es), X);
}

MatrixXd network_forward(const NetworkSpec& net, const LayerOperatorFactory& ops, const MatrixXd& X) {
  net.validate();
  if (X.cols() != net.input_channels) throw ContractError("input channel count does not match network");
  MatrixXd cur = X;
  for (std::size_t l = 0; l < net.layers.size(); ++l) cur = layer_forward(net.layers[l], ops(l), cur);
  return cur;
}

MatrixXd network_forward(const NetworkSpec& net, const EigenSystem& es, const MatrixXd& X) {
  if (X.rows() != es.size()) throw ContractError("feature rows do not match eigensystem size");
  return network_forward(
      net, [&](std::size_t l) { return spectral_operator(net.layers[l], es); }, X);
}

WeightSums weight_sums(const LayerSpec& layer) {
  WeightSums s;
  for (const auto& t : layer.theta)
    if (t.size()) s.a1 = std::max(s.a1, t.cwiseAbs().colwise().sum().maxCoeff());
  for (const auto& a : layer.alpha)
    if (a.size()) s.a2 = std::max(s.a2, a.cwiseAbs().rowwise().sum().maxCoeff());
  return s;
}

double composed_error_bound(const std::vector<double>& a1, const std::vector<double>& a2,
                            const std::vector<double>& eps) {
  if (a1.size() != a2.size() || a1.size() != eps.size())
    throw ContractError("composed_error_bound needs equal-length inputs");
  const std::size_t L = eps.size();
  double total = 0.0;
  for (std::size_t i = 0; i < L; ++i) {
    double prod = 1.0;
    for (std::size_t j = i; j < L; ++j) prod *= a1[j] * a2[j];
    total += prod * eps[i];
  }
  return total;
}

double filter_error_bound(Index kappa, double a_lip, double alpha, double beta, double gamma, double norm2_f,
                          double norm4_f) {
  return 6.0 * static_cast<double>(kappa) * ((a_lip * alpha + beta) * norm2_f + gamma * norm4_f);
}

FilterBound filter_error_bound_checked(Index kappa, double a_lip, double alpha, double beta, double gamma,
                                       double norm2_f, double norm4_f, double max_phi_norm4) {
  FilterBound b;
  b.value = filter_error_bound(kappa, a_lip, alpha, beta, gamma, norm2_f, norm4_f);
  b.lipschitz_ok = a_lip * alpha <= 1.0;
  b.beta_ok = beta <= 1.0;
  b.gamma_ok = gamma * max_phi_norm4 <= 1.0;
  return b;
}

SparseMatrixXd renormalized_adjacency(const SparseMatrixXd& A) {
  if (A.rows() != A.cols()) throw ContractError("adjacency must be square");
  const Index n = A.rows();
  SparseMatrixXd I(n, n);
  I.setIdentity();
  SparseMatrixXd M = A + I;
  VectorXd dinv = (VectorXd(A * VectorXd::Ones(n)).array() + 1.0).rsqrt();
  return dinv.asDiagonal() * M * dinv.asDiagonal();
}

MatrixXd mcn_forward(const SparseMatrixXd& A, const MatrixXd& X, const std::vector<MatrixXd>& thetas) {
  const SparseMatrixXd Ah = renormalized_adjacency(A);
  MatrixXd cur = X;
  for (const auto& t : thetas) {
    if (t.rows() != cur.cols()) throw ContractError("MCN weight matrix has wrong row count");
    cur = (Ah * cur * t).cwiseMax(0.0);
  }
  return cur;
}

SparseMatrixXd lazy_walk(const SparseMatrixXd& A) {
  const Index n = A.rows();
  if (A.cols() != n) throw ContractError("adjacency must be square");
  const VectorXd deg = A.transpose() * VectorXd::Ones(n);
  VectorXd dinv(n);
  for (Index i = 0; i < n; ++i) dinv(i) = deg(i) > 0.0 ? 1.0 / deg(i) : 0.0;
  SparseMatrixXd I(n, n);
  I.setIdentity();
  SparseMatrixXd AD = A * dinv.asDiagonal();
  return 0.5 * (I + AD);
}

MatrixXd lazy_walk_power(const SparseMatrixXd& P, Index t, const MatrixXd& x) {
  if (t < 0) throw DomainError("walk power must be nonnegative");
  if (x.rows() != P.cols()) throw ContractError("signal length does not match walk operator");
  MatrixXd cur = x;
  for (Index s = 0; s < t; ++s) cur = P * cur;
  return cur;
}

namespace {

std::vector<MatrixXd> identity_alpha(Index widths, Index J) {
  return std::vector<MatrixXd>(static_cast<std::size_t>(widths), MatrixXd::Identity(J, J));
}

}  // namespace

LayerSpec per_channel_layer(Index channels, std::vector<FilterSpec> filters_jk, Index num_filters, Activation act) {
  LayerSpec l;
  l.in_channels = channels;
  l.num_filters = num_filters;
  l.combine_width = 1;
  l.cross_width = num_filters;
  l.filters = std::move(filters_jk);
  l.theta.assign(static_cast<std::size_t>(num_filters), MatrixXd::Ones(channels, 1));
  l.alpha = identity_alpha(1, num_filters);
  l.activation = act;
  l.validate();
  return l;
}

LayerSpec shared_bank_layer(std::vector<FilterSpec> bank, const MatrixXd& theta, Activation act) {
  LayerSpec l;
  l.in_channels = theta.rows();
  l.num_filters = static_cast<Index>(bank.size());
  l.combine_width = theta.cols();
  l.cross_width = l.num_filters;
  l.filters = std::move(bank);
  l.theta.assign(static_cast<std::size_t>(l.num_filters), theta);
  l.alpha = identity_alpha(l.combine_width, l.num_filters);
  l.activation = act;
  l.validate();
  return l;
}

LayerSpec mcn_layer(const FilterSpec& lowpass, const MatrixXd& theta, Activation act) {
  return shared_bank_layer({lowpass}, theta, act);
}

LayerSpec scattering_layer(Index channels, int J) {
  return shared_bank_layer(wavelet_bank(J), MatrixXd::Identity(channels, channels), Activation::abs);
}

LayerSpec learnable_scattering_layer(Index channels, int J, std::vector<MatrixXd> alpha, Activation act) {
  std::vector<FilterSpec> bank;
  for (int j = 0; j <= J; ++j) bank.push_back(FilterSpec::heat(j));
  LayerSpec l = shared_bank_layer(std::move(bank), MatrixXd::Identity(channels, channels), act);
  if (!alpha.empty()) {
    l.alpha = std::move(alpha);
    l.cross_width = l.alpha.front().rows();
  }
  l.validate();
  return l;
}

LayerSpec mlp_layer(const MatrixXd& theta, Activation act) {
  return shared_bank_layer({FilterSpec::identity()}, theta, act);
}

NetworkSpec default_dlf_network(Index input_channels, const MatrixXd& poly_coeffs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  auto normalized = [&](Index rows, Index cols) {
    MatrixXd t = MatrixXd::NullaryExpr(rows, cols, [&] { return unif(rng); });
    for (Index k = 0; k < cols; ++k) t.col(k) /= t.col(k).cwiseAbs().sum();
    return t;
  };
  NetworkSpec net;
  net.input_channels = input_channels;
  const auto bank = dlf_poly_filterbank(poly_coeffs);
  const Index J = static_cast<Index>(bank.size());
  net.layers.push_back(shared_bank_layer(bank, normalized(input_channels, 16)));
  net.layers.push_back(shared_bank_layer(bank, normalized(J * 16, 32)));
  return net;
}

}  // namespace mfcn
