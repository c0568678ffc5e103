#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mfcn/filter.hpp"
#include "mfcn/graph.hpp"
#include "mfcn/manifold.hpp"
#include "mfcn/net.hpp"
#include "mfcn/spectral.hpp"

namespace mfcn {

// ---------------------------------------------------------------------------
// Continuum targets

/// Multiplier taking Laplace-Beltrami eigenvalues to the limit of the graph
/// operator as built: scale_factor(mode) for the dense family, times c_eta^2
/// for epsilon / knn (the prefactor c_eta enters once in the normalization and
/// once through the kernel's second moment).
double continuum_eigen_scale(const ManifoldSpec& spec, const GraphMeta& meta);

/// s * lambda_i^{LB} for i = 1..kappa.
VectorXd continuum_eigenvalues(const ManifoldSpec& spec, Index kappa, double scale);

// ---------------------------------------------------------------------------
// Error measurements

/// c* = lambda_2^n / lambda_2 (first nonzero continuum eigenvalue).
double calibration_factor(const EigenSystem& es, const VectorXd& continuum);

/// max_{i <= kappa} |c lambda_i - lambda_i^n|.
double measure_alpha(const EigenSystem& es, const VectorXd& continuum, Index kappa, double calibration = 1.0);

struct BetaResult {
  double value = 0.0;
  bool cluster_mismatch = false;
};

/// Cluster-aligned eigenvector error. Graph blocks are taken at the index
/// ranges of the continuum clusters; a graph spectral cluster straddling a
/// block boundary marks the result as mismatched.
BetaResult measure_beta(const EigenSystem& es, const PointCloud& cloud, const std::vector<EigenFunction>& basis,
                        Index kappa);

/// Orthogonal-alignment error of one block: max column norm of M_disc R - M_cont
/// with R the polar factor of M_disc^T M_cont.
double aligned_block_error(const MatrixXd& disc, const MatrixXd& cont);

struct InnerProductPair {
  ScalarField f;
  ScalarField g;
  double inner = 0.0;   // <f, g> in L2(mu)
  double norm4_f = 1.0;
  double norm4_g = 1.0;
};

struct GammaResult {
  double gamma = 0.0;              // max over pairs
  std::vector<double> discrepancy; // |<P_n f, P_n g> - <f, g>| per pair
  std::vector<double> scale;       // ||f||_4 ||g||_4 per pair
  Index bound_violations = 0;      // discrepancy > 6 sqrt(log n / n) scale
};

GammaResult measure_gamma(const PointCloud& cloud, const std::vector<InnerProductPair>& pairs);

/// All pairs (i <= j) from the first kappa eigenfunctions plus `random_pairs`
/// random bandlimited combinations.
std::vector<InnerProductPair> default_gamma_pairs(const ManifoldSpec& spec, Index kappa, int random_pairs,
                                                  std::uint64_t seed);

struct SpectralErrors {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double max_phi_norm4 = 1.0;
};

struct FilterErrorResult {
  double error = 0.0;
  FilterBound bound;
  double a_lip = 0.0;
  bool truncated = false;
};

/// || w(L_n) P_n f - P_n w(L) f ||_2 for bandlimited f with coefficients
/// `coeffs`, continuum eigenvalues scaled by `eigen_scale`.
FilterErrorResult measure_filter_error(const EigenSystem& es, const PointCloud& cloud, const FilterSpec& w,
                                       const VectorXd& coeffs, double eigen_scale, const SpectralErrors& errs);

struct NetworkOracleOptions {
  int grid = 4096;          // K quadrature nodes
  int modes = 64;           // kappa_oracle
  double tail_tolerance = 1e-3;
};

/// Circle-only continuum forward pass. Each channel is a coefficient vector
/// over the first `modes` eigenfunctions; activations act pointwise on the
/// grid and are projected back. The last layer keeps its pre-activation
/// coefficients so outputs can be evaluated exactly anywhere.
struct ContinuumNetwork {
  std::vector<VectorXd> preactivation;  // final layer, one per output channel
  Activation activation = Activation::identity;
  double tail_energy = 0.0;             // max relative discarded energy
  bool oracle_insufficient = false;

  double value(Index channel, std::span<const double> point) const;
  VectorXd evaluate_Pn(Index channel, const PointCloud& cloud) const;
};

ContinuumNetwork continuum_network(const NetworkSpec& net, const std::vector<VectorXd>& input_coeffs,
                                   double eigen_scale, const NetworkOracleOptions& opt = {});

struct NetworkErrorResult {
  double error = 0.0;
  double tail_energy = 0.0;
  bool oracle_insufficient = false;
};

/// max_k || x_k^n - P_n f_k ||_2 with the discrete pass driven by `es`.
NetworkErrorResult measure_network_error(const NetworkSpec& net, const EigenSystem& es, const PointCloud& cloud,
                                         const std::vector<VectorXd>& input_coeffs, double eigen_scale,
                                         const NetworkOracleOptions& opt = {});

/// Mean eigenvalue of each of the first `count` nonzero continuum clusters,
/// divided by the first.
VectorXd cluster_eigenvalue_ratios(const EigenSystem& es, const ManifoldSpec& spec, int count);

// ---------------------------------------------------------------------------
// Rates

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
  double r2 = 0.0;
  Index count = 0;
  bool dropped_nonpositive = false;
};

/// OLS of log(error) on log(n); nonpositive errors are dropped (flagged).
RateFit fit_rate(const std::vector<double>& ns, const std::vector<double>& errors);

double median(std::vector<double> v);

// ---------------------------------------------------------------------------
// Sweeps

/// Splittable per-trial seed: splitmix64(master ^ splitmix64(n) ^ splitmix64(trial ^ 0xD1B54A32D192ED03)).
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t trial_seed(std::uint64_t master, Index n, int trial);

struct SweepConfig {
  ManifoldSpec manifold = ManifoldSpec::circle();
  GraphFamily family = GraphFamily::epsilon;
  KernelSpec kernel;
  std::vector<Index> ns{256, 512, 1024, 2048, 4096};
  int trials = 10;
  Index kappa = 9;
  std::uint64_t master_seed = 20240601;
  std::optional<double> bandwidth_constant;  // AUTO preset when empty
  std::optional<bool> calibrate;             // dense: on, epsilon / knn: off
  std::vector<FilterSpec> filters{FilterSpec::heat(0.5), FilterSpec::heat(1.0)};
  int gamma_random_pairs = 5;
  int threads = 0;  // 0: MFCN_THREADS or hardware concurrency
  std::optional<double> synthetic_rate;  // test hook: errors 3 n^{-r}
  PartialEigOptions eig;

  double resolved_constant() const;
  bool resolved_calibrate() const;
};

struct FilterSample {
  std::string filter;
  double error = 0.0;
  double bound = 0.0;
  bool hypotheses = false;
  bool truncated = false;
};

struct SpectralErrorSample {
  Index n = 0;
  int trial = 0;
  std::uint64_t seed = 0;
  double param = 0.0;
  Index kappa = 0;
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double calibration = 1.0;
  bool disconnected = false;
  bool cluster_mismatch = false;
  double residual_max = 0.0;
  Index gamma_pairs = 0;
  Index gamma_violations = 0;
  VectorXd eigenvalues;
  std::vector<FilterSample> filters;
  double filter_error_max() const;
};

struct MetricFit {
  std::string metric;
  RateFit fit;
  double target_slope = 0.0;
};

struct ConvergenceReport {
  SweepConfig config;
  double bandwidth_constant = 0.0;
  double calibration = 1.0;
  bool calibrated = false;
  std::vector<SpectralErrorSample> samples;
  std::vector<MetricFit> fits;
  Index disconnected = 0;
  double runtime_seconds = 0.0;

  /// Per-n medians of a metric over connected trials.
  std::vector<std::pair<Index, double>> medians(const std::string& metric) const;
  const MetricFit* fit(const std::string& metric) const;
};

/// Metric value by name: alpha, beta, gamma, gamma_sq, filter_error.
double sample_metric(const SpectralErrorSample& s, const std::string& metric);

ConvergenceReport run_sweep(const SweepConfig& config);

/// Work-item parallel map over [0, count) with at most `threads` workers.
void parallel_for(Index count, int threads, const std::function<void(Index)>& body);
int resolve_threads(int requested);

struct AssertionResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Slope bands and dominance checks for a sweep report.
std::vector<AssertionResult> evaluate_assertions(const ConvergenceReport& report);

}  // namespace mfcn
