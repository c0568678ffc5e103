#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "mfcn/harness.hpp"

namespace mfcn {

double continuum_eigen_scale(const ManifoldSpec& spec, const GraphMeta& meta) {
  const ScaleMode mode = natural_scale_mode(meta.family);
  const double base = scale_factor(spec, mode);
  if (meta.family == GraphFamily::dense_gaussian) return base;
  const double c_eta = kernel_constant(meta.kernel, spec.intrinsic_dim());
  return base * c_eta * c_eta;
}

VectorXd continuum_eigenvalues(const ManifoldSpec& spec, Index kappa, double scale) {
  const auto basis = manifold_basis(spec, static_cast<int>(kappa));
  VectorXd out(kappa);
  for (Index i = 0; i < kappa; ++i) out(i) = scale * basis[static_cast<std::size_t>(i)].eigenvalue();
  return out;
}

double calibration_factor(const EigenSystem& es, const VectorXd& continuum) {
  for (Index i = 0; i < continuum.size() && i < es.count(); ++i)
    if (continuum(i) > 0.0) return es.values(i) / continuum(i);
  throw InsufficientDataError("calibration needs a nonzero continuum eigenvalue within kappa");
}

double measure_alpha(const EigenSystem& es, const VectorXd& continuum, Index kappa, double calibration) {
  if (kappa > es.count() || kappa > continuum.size())
    throw RangeError("kappa exceeds available eigenpairs");
  double worst = 0.0;
  for (Index i = 0; i < kappa; ++i) worst = std::max(worst, std::abs(calibration * continuum(i) - es.values(i)));
  return worst;
}

double aligned_block_error(const MatrixXd& disc, const MatrixXd& cont) {
  if (disc.rows() != cont.rows()) throw ContractError("aligned blocks need equal row counts");
  const MatrixXd C = disc.transpose() * cont;
  Eigen::JacobiSVD<MatrixXd> svd(C, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const MatrixXd R = svd.matrixU() * svd.matrixV().transpose();
  const MatrixXd diff = disc * R - cont;
  return diff.colwise().norm().maxCoeff();
}

BetaResult measure_beta(const EigenSystem& es, const PointCloud& cloud, const std::vector<EigenFunction>& basis,
                        Index kappa) {
  if (kappa > es.count() || kappa > static_cast<Index>(basis.size()))
    throw RangeError("kappa exceeds available eigenpairs");
  BetaResult out;

  // Continuum clusters among the first kappa functions.
  std::vector<IndexRange> blocks;
  for (Index i = 0; i < kappa; ++i) {
    const double lam = basis[static_cast<std::size_t>(i)].eigenvalue();
    if (blocks.empty() || lam != basis[static_cast<std::size_t>(blocks.back().start)].eigenvalue())
      blocks.push_back({i, 1});
    else
      ++blocks.back().size;
  }
  // Graph clusters must not cross block boundaries.
  for (const auto& g : spectral_clusters(es.values.head(kappa))) {
    for (const auto& b : blocks) {
      const Index lo = std::max(g.start, b.start), hi = std::min(g.start + g.size, b.start + b.size);
      if (lo < hi && (g.start < b.start || g.start + g.size > b.start + b.size)) out.cluster_mismatch = true;
    }
  }

  for (const auto& b : blocks) {
    MatrixXd cont(cloud.size(), b.size);
    for (Index c = 0; c < b.size; ++c) {
      VectorXd v = evaluate_Pn_with(basis[static_cast<std::size_t>(b.start + c)], cloud);
      const double nv = v.norm();
      cont.col(c) = nv > 0.0 ? VectorXd(v / nv) : v;
    }
    const MatrixXd disc = es.vectors.middleCols(b.start, b.size);
    out.value = std::max(out.value, aligned_block_error(disc, cont));
  }
  return out;
}

GammaResult measure_gamma(const PointCloud& cloud, const std::vector<InnerProductPair>& pairs) {
  GammaResult r;
  const double n = static_cast<double>(cloud.size());
  const double limit = 6.0 * std::sqrt(std::log(n) / n);
  for (const auto& p : pairs) {
    const VectorXd pf = evaluate_Pn(p.f, cloud);
    const VectorXd pg = evaluate_Pn(p.g, cloud);
    const double disc = std::abs(pf.dot(pg) - p.inner);
    const double s = p.norm4_f * p.norm4_g;
    r.discrepancy.push_back(disc);
    r.scale.push_back(s);
    if (disc > limit * s) ++r.bound_violations;
    r.gamma = std::max(r.gamma, std::sqrt(disc / s));
  }
  return r;
}

std::vector<InnerProductPair> default_gamma_pairs(const ManifoldSpec& spec, Index kappa, int random_pairs,
                                                  std::uint64_t seed) {
  const auto basis = manifold_basis(spec, static_cast<int>(kappa));
  std::vector<double> norm4;
  for (const auto& phi : basis) norm4.push_back(quadrature(spec, phi.field(), 4.0));

  std::vector<InnerProductPair> out;
  for (std::size_t i = 0; i < basis.size(); ++i)
    for (std::size_t j = i; j < basis.size(); ++j)
      out.push_back({basis[i].field(), basis[j].field(), i == j ? 1.0 : 0.0, norm4[i], norm4[j]});

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  for (int r = 0; r < random_pairs; ++r) {
    VectorXd a = VectorXd::NullaryExpr(kappa, [&] { return normal(rng); });
    VectorXd b = VectorXd::NullaryExpr(kappa, [&] { return normal(rng); });
    a.normalize();
    b.normalize();
    auto f = bandlimited_field(spec, a);
    auto g = bandlimited_field(spec, b);
    out.push_back({f, g, a.dot(b), quadrature(spec, f, 4.0), quadrature(spec, g, 4.0)});
  }
  return out;
}

FilterErrorResult measure_filter_error(const EigenSystem& es, const PointCloud& cloud, const FilterSpec& w,
                                       const VectorXd& coeffs, double eigen_scale, const SpectralErrors& errs) {
  const ManifoldSpec& spec = cloud.manifold;
  const auto f = bandlimited_field(spec, coeffs);
  const VectorXd pf = evaluate_Pn(f, cloud);
  const auto basis = manifold_basis(spec, static_cast<int>(coeffs.size()));

  VectorXd gain(coeffs.size());
  for (Index i = 0; i < coeffs.size(); ++i)
    gain(i) = w(eigen_scale * basis[static_cast<std::size_t>(i)].eigenvalue()) * coeffs(i);
  const VectorXd target = evaluate_Pn(bandlimited_field(spec, gain), cloud);

  FilterErrorResult r;
  const auto filtered = apply_filter_checked(es, w, pf);
  r.truncated = filtered.truncated;
  r.error = (filtered.signal - target).norm();
  const LipschitzBound lip = lipschitz_bound(w, 0.0);
  r.a_lip = lip.unbounded ? std::numeric_limits<double>::infinity() : lip.value;
  const double norm2 = coeffs.norm();
  const double norm4 = quadrature(spec, f, 4.0);
  r.bound = filter_error_bound_checked(coeffs.size(), r.a_lip, errs.alpha, errs.beta, errs.gamma, norm2, norm4,
                                       errs.max_phi_norm4);
  return r;
}

// ---------------------------------------------------------------------------
// Continuum network oracle on the circle.

namespace {

struct CircleGrid {
  MatrixXd phi;  // K x modes
  VectorXd lambda;
  int K = 0;
};

CircleGrid circle_grid(int K, int modes) {
  CircleGrid g;
  g.K = K;
  const ManifoldSpec spec = ManifoldSpec::circle();
  const auto basis = manifold_basis(spec, modes);
  g.phi.resize(K, modes);
  g.lambda.resize(modes);
  for (int m = 0; m < modes; ++m) g.lambda(m) = basis[static_cast<std::size_t>(m)].eigenvalue();
  for (int k = 0; k < K; ++k) {
    const double theta = kTwoPi * k / K;
    const std::span<const double> pt(&theta, 1);
    for (int m = 0; m < modes; ++m) g.phi(k, m) = basis[static_cast<std::size_t>(m)](pt);
  }
  return g;
}

}  // namespace

double ContinuumNetwork::value(Index channel, std::span<const double> point) const {
  const VectorXd& c = preactivation.at(static_cast<std::size_t>(channel));
  const auto basis = manifold_basis(ManifoldSpec::circle(), static_cast<int>(c.size()));
  double acc = 0.0;
  for (Index i = 0; i < c.size(); ++i) acc += c(i) * basis[static_cast<std::size_t>(i)](point);
  return activate(activation, acc);
}

VectorXd ContinuumNetwork::evaluate_Pn(Index channel, const PointCloud& cloud) const {
  const VectorXd& c = preactivation.at(static_cast<std::size_t>(channel));
  const auto basis = manifold_basis(ManifoldSpec::circle(), static_cast<int>(c.size()));
  return evaluate_Pn_with(
      [&](std::span<const double> x) {
        double acc = 0.0;
        for (Index i = 0; i < c.size(); ++i) acc += c(i) * basis[static_cast<std::size_t>(i)](x);
        return activate(activation, acc);
      },
      cloud);
}

ContinuumNetwork continuum_network(const NetworkSpec& net, const std::vector<VectorXd>& input_coeffs,
                                   double eigen_scale, const NetworkOracleOptions& opt) {
  net.validate();
  if (static_cast<Index>(input_coeffs.size()) != net.input_channels)
    throw ContractError("continuum input channel count does not match network");
  if (opt.modes < 1 || opt.grid < 2 * opt.modes) throw ConfigError("oracle grid must resolve the retained modes");
  const CircleGrid grid = circle_grid(opt.grid, opt.modes);

  std::vector<VectorXd> cur;
  for (const auto& c : input_coeffs) {
    if (c.size() > opt.modes) throw ConfigError("input is not bandlimited to the oracle modes");
    VectorXd full = VectorXd::Zero(opt.modes);
    full.head(c.size()) = c;
    cur.push_back(full);
  }

  ContinuumNetwork out;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const LayerSpec& layer = net.layers[l];
    // Filtering and combine act on coefficients; the steps are linear.
    std::vector<MatrixXd> blocks(static_cast<std::size_t>(layer.num_filters), MatrixXd(opt.modes, layer.in_channels));
    for (Index j = 0; j < layer.num_filters; ++j)
      for (Index k = 0; k < layer.in_channels; ++k) {
        const VectorXd gain = layer.filter(j, k).response(eigen_scale * grid.lambda);
        blocks[static_cast<std::size_t>(j)].col(k) = gain.cwiseProduct(cur[static_cast<std::size_t>(k)]);
      }
    const auto combined = combine_step(layer, blocks);
    const auto crossed = cross_step(layer, combined);

    std::vector<VectorXd> pre(static_cast<std::size_t>(layer.output_channels()));
    for (Index j = 0; j < layer.cross_width; ++j)
      for (Index k = 0; k < layer.combine_width; ++k)
        pre[static_cast<std::size_t>(reshape_index(j, k, layer.combine_width))] = crossed[static_cast<std::size_t>(j)].col(k);

    if (l + 1 == net.layers.size()) {
      out.preactivation = std::move(pre);
      out.activation = layer.activation;
      break;
    }
    cur.clear();
    for (const auto& c : pre) {
      const VectorXd values = activate(layer.activation, grid.phi * c);
      const VectorXd proj = grid.phi.transpose() * values / static_cast<double>(grid.K);
      const double energy = values.squaredNorm() / grid.K;
      const double tail = std::max(0.0, energy - proj.squaredNorm());
      if (energy > 0.0) out.tail_energy = std::max(out.tail_energy, tail / energy);
      cur.push_back(proj);
    }
  }
  if (net.layers.empty()) out.preactivation = cur;
  out.oracle_insufficient = out.tail_energy > opt.tail_tolerance;
  return out;
}

NetworkErrorResult measure_network_error(const NetworkSpec& net, const EigenSystem& es, const PointCloud& cloud,
                                         const std::vector<VectorXd>& input_coeffs, double eigen_scale,
                                         const NetworkOracleOptions& opt) {
  if (cloud.manifold.kind != ManifoldKind::circle) throw ConfigError("network oracle is implemented on the circle only");
  const ContinuumNetwork cont = continuum_network(net, input_coeffs, eigen_scale, opt);
  MatrixXd X(cloud.size(), net.input_channels);
  for (Index k = 0; k < net.input_channels; ++k)
    X.col(k) = evaluate_Pn(bandlimited_field(cloud.manifold, input_coeffs[static_cast<std::size_t>(k)]), cloud);
  const MatrixXd out = network_forward(net, es, X);
  NetworkErrorResult r;
  for (Index k = 0; k < out.cols(); ++k) r.error = std::max(r.error, (out.col(k) - cont.evaluate_Pn(k, cloud)).norm());
  r.tail_energy = cont.tail_energy;
  r.oracle_insufficient = cont.oracle_insufficient;
  return r;
}

VectorXd cluster_eigenvalue_ratios(const EigenSystem& es, const ManifoldSpec& spec, int count) {
  // One extra function reveals whether the last cluster inside es is complete.
  const int have = static_cast<int>(es.count());
  const int probe = std::min(have + 1, implemented_eigenpairs(spec.kind));
  const auto clusters = continuum_clusters(spec, probe);
  if (static_cast<int>(clusters.size()) <= count ||
      clusters[static_cast<std::size_t>(count)].start + clusters[static_cast<std::size_t>(count)].size > have)
    throw RangeError("eigensystem too small for the requested cluster count");
  VectorXd out(count);
  for (int c = 1; c <= count; ++c) {
    const auto& b = clusters[static_cast<std::size_t>(c)];
    out(c - 1) = es.values.segment(b.start, b.size).mean();
  }
  return out / out(0);
}

}  // namespace mfcn
