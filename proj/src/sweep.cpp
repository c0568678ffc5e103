#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "mfcn/harness.hpp"

namespace mfcn {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t trial_seed(std::uint64_t master, Index n, int trial) {
  return splitmix64(master ^ splitmix64(static_cast<std::uint64_t>(n)) ^
                    splitmix64(static_cast<std::uint64_t>(trial) ^ 0xD1B54A32D192ED03ULL));
}

int resolve_threads(int requested) {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw < 1) hw = 1;
  int n = requested > 0 ? requested : hw;
  if (const char* env = std::getenv("MFCN_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) n = std::min(n, cap);
  }
  return std::max(1, n);
}

void parallel_for(Index count, int threads, const std::function<void(Index)>& body) {
  const int workers = static_cast<int>(std::min<Index>(std::max(1, threads), std::max<Index>(count, 1)));
  if (workers <= 1) {
    for (Index i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<Index> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (Index i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

double median(std::vector<double> v) {
  if (v.empty()) throw InsufficientDataError("median of empty sample");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

RateFit fit_rate(const std::vector<double>& ns, const std::vector<double>& errors) {
  if (ns.size() != errors.size()) throw ContractError("fit_rate needs paired samples");
  RateFit fit;
  std::vector<double> x, y;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    if (!(errors[i] > 0.0) || !(ns[i] > 0.0)) {
      fit.dropped_nonpositive = true;
      continue;
    }
    x.push_back(std::log(ns[i]));
    y.push_back(std::log(errors[i]));
  }
  const std::size_t m = x.size();
  if (m < 3) throw InsufficientDataError("fit_rate needs at least 3 positive samples");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < m; ++i) mx += x[i], my += y[i];
  mx /= m;
  my /= m;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw InsufficientDataError("fit_rate needs at least two distinct n");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ssr = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    ssr += r * r;
  }
  fit.r2 = syy > 0.0 ? 1.0 - ssr / syy : 1.0;
  fit.stderr_slope = std::sqrt(ssr / static_cast<double>(m - 2) / sxx);
  fit.count = static_cast<Index>(m);
  return fit;
}

double SpectralErrorSample::filter_error_max() const {
  double m = 0.0;
  for (const auto& f : filters) m = std::max(m, f.error);
  return m;
}

double sample_metric(const SpectralErrorSample& s, const std::string& metric) {
  if (metric == "alpha") return s.alpha;
  if (metric == "beta") return s.beta;
  if (metric == "gamma") return s.gamma;
  if (metric == "gamma_sq") return s.gamma * s.gamma;
  if (metric == "filter_error") return s.filter_error_max();
  throw ConfigError("unknown metric '" + metric + "'");
}

std::vector<std::pair<Index, double>> ConvergenceReport::medians(const std::string& metric) const {
  std::vector<std::pair<Index, double>> out;
  for (Index n : config.ns) {
    std::vector<double> v;
    for (const auto& s : samples)
      if (s.n == n && !s.disconnected) v.push_back(sample_metric(s, metric));
    if (!v.empty()) out.emplace_back(n, median(v));
  }
  return out;
}

const MetricFit* ConvergenceReport::fit(const std::string& metric) const {
  for (const auto& f : fits)
    if (f.metric == metric) return &f;
  return nullptr;
}

double SweepConfig::resolved_constant() const {
  return bandwidth_constant ? *bandwidth_constant : default_bandwidth_constant(manifold.kind, family);
}

bool SweepConfig::resolved_calibrate() const {
  return calibrate ? *calibrate : family == GraphFamily::dense_gaussian;
}

namespace {

struct RawTrial {
  PointCloud cloud;
  EigenSystem es;
  GraphMeta meta;
};

GraphLaplacian build_graph(const SweepConfig& cfg, const PointCloud& cloud, double param) {
  const int d = cfg.manifold.intrinsic_dim();
  switch (cfg.family) {
    case GraphFamily::dense_gaussian: return build_dense_gaussian(cloud, param, d);
    case GraphFamily::epsilon: return build_epsilon(cloud, param, d, cfg.kernel);
    case GraphFamily::knn: return build_knn(cloud, static_cast<Index>(param), d, cfg.kernel);
  }
  throw ConfigError("unknown graph family");
}

double target_slope(GraphFamily family, int d, const std::string& metric) {
  if (metric == "gamma_sq") return -0.5;
  if (metric == "gamma") return -0.25;
  return family == GraphFamily::dense_gaussian ? -2.0 / (d + 6.0) : -1.0 / (d + 4.0);
}

void fit_all(ConvergenceReport& report) {
  const int d = report.config.manifold.intrinsic_dim();
  for (const std::string metric : {"alpha", "beta", "gamma", "gamma_sq", "filter_error"}) {
    const auto med = report.medians(metric);
    std::vector<double> ns, ys;
    for (const auto& [n, v] : med) {
      ns.push_back(static_cast<double>(n));
      ys.push_back(v);
    }
    try {
      report.fits.push_back({metric, fit_rate(ns, ys), target_slope(report.config.family, d, metric)});
    } catch (const InsufficientDataError&) {
    }
  }
}

void validate(const SweepConfig& cfg) {
  if (cfg.ns.empty()) throw ConfigError("sweep needs at least one n");
  for (std::size_t i = 0; i < cfg.ns.size(); ++i) {
    if (cfg.ns[i] < 2) throw ConfigError("sweep n values must be >= 2");
    if (i > 0 && cfg.ns[i] <= cfg.ns[i - 1]) throw ConfigError("sweep n-grid must be strictly increasing");
  }
  if (cfg.trials < 1) throw ConfigError("sweep needs at least one trial");
  if (cfg.kappa < 2) throw ConfigError("sweep needs kappa >= 2");
  if (!cfg.manifold.density.is_uniform())
    throw ConfigError("convergence sweeps need uniform density (analytic eigenbasis)");
}

}  // namespace

ConvergenceReport run_sweep(const SweepConfig& config) {
  validate(config);
  const auto start = std::chrono::steady_clock::now();
  ConvergenceReport report;
  report.config = config;
  report.bandwidth_constant = config.resolved_constant();
  const int d = config.manifold.intrinsic_dim();
  const Index trials = config.trials;
  const Index items = static_cast<Index>(config.ns.size()) * trials;

  if (config.synthetic_rate) {
    const double r = *config.synthetic_rate;
    for (Index n : config.ns)
      for (int t = 0; t < config.trials; ++t) {
        SpectralErrorSample s;
        s.n = n;
        s.trial = t;
        s.seed = trial_seed(config.master_seed, n, t);
        s.kappa = config.kappa;
        const double y = 3.0 * std::pow(static_cast<double>(n), -r);
        s.alpha = s.beta = y;
        s.gamma = std::sqrt(y);
        s.filters.push_back({"synthetic", y, std::numeric_limits<double>::infinity(), true, false});
        report.samples.push_back(std::move(s));
      }
    fit_all(report);
    report.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
  }

  const int threads = resolve_threads(config.threads);
  const Index kappa = config.kappa;
  const auto basis = manifold_basis(config.manifold, static_cast<int>(kappa));
  const VectorXd lb = continuum_eigenvalues(config.manifold, kappa, 1.0);
  const auto pairs = default_gamma_pairs(config.manifold, kappa, config.gamma_random_pairs,
                                         splitmix64(config.master_seed ^ 0x6a09e667f3bcc909ULL));
  double max_phi_norm4 = 0.0;
  for (const auto& phi : basis) max_phi_norm4 = std::max(max_phi_norm4, quadrature(config.manifold, phi.field(), 4.0));

  std::mt19937_64 coeff_rng(splitmix64(config.master_seed ^ 0xbb67ae8584caa73bULL));
  std::normal_distribution<double> normal;
  VectorXd fcoeffs = VectorXd::NullaryExpr(kappa, [&] { return normal(coeff_rng); });
  fcoeffs.normalize();

  // Phase 1: clouds, graphs, eigensystems.
  std::vector<RawTrial> raw(static_cast<std::size_t>(items));
  parallel_for(items, threads, [&](Index item) {
    const Index n = config.ns[static_cast<std::size_t>(item / trials)];
    const int t = static_cast<int>(item % trials);
    RawTrial& r = raw[static_cast<std::size_t>(item)];
    r.cloud = sample_points(config.manifold, n, trial_seed(config.master_seed, n, t));
    const double param = bandwidth_schedule(config.family, n, d, report.bandwidth_constant);
    const GraphLaplacian L = build_graph(config, r.cloud, param);
    r.meta = L.meta();
    PartialEigOptions eo = config.eig;
    eo.seed = splitmix64(r.cloud.seed);
    r.es = eig_partial(L, std::min(kappa, n), eo);
  });

  // Calibration at the largest n, held fixed.
  report.calibrated = config.resolved_calibrate();
  double eigen_scale = continuum_eigen_scale(config.manifold, raw.front().meta);
  if (report.calibrated) {
    std::vector<double> c;
    for (Index t = 0; t < trials; ++t) {
      const RawTrial& r = raw[static_cast<std::size_t>(items - trials + t)];
      if (!r.meta.disconnected) c.push_back(calibration_factor(r.es, lb));
    }
    if (c.empty()) throw InsufficientDataError("no connected trial at the largest n for calibration");
    eigen_scale = median(c);
  }
  report.calibration = eigen_scale;
  const VectorXd targets = eigen_scale * lb;

  // Phase 2: measurements.
  report.samples.resize(static_cast<std::size_t>(items));
  parallel_for(items, threads, [&](Index item) {
    const RawTrial& r = raw[static_cast<std::size_t>(item)];
    SpectralErrorSample& s = report.samples[static_cast<std::size_t>(item)];
    s.n = r.cloud.size();
    s.trial = static_cast<int>(item % trials);
    s.seed = r.cloud.seed;
    s.param = r.meta.param;
    s.kappa = r.es.count();
    s.calibration = eigen_scale;
    s.disconnected = r.meta.disconnected;
    s.residual_max = r.es.residual_max;
    s.eigenvalues = r.es.values;
    s.alpha = measure_alpha(r.es, targets, s.kappa);
    const BetaResult beta = measure_beta(r.es, r.cloud, basis, s.kappa);
    s.beta = beta.value;
    s.cluster_mismatch = beta.cluster_mismatch;
    const GammaResult gamma = measure_gamma(r.cloud, pairs);
    s.gamma = gamma.gamma;
    s.gamma_pairs = static_cast<Index>(gamma.discrepancy.size());
    s.gamma_violations = gamma.bound_violations;
    const SpectralErrors errs{s.alpha, s.beta, s.gamma, max_phi_norm4};
    for (const auto& w : config.filters) {
      const auto fe = measure_filter_error(r.es, r.cloud, w, fcoeffs.head(s.kappa), eigen_scale, errs);
      s.filters.push_back({w.describe(), fe.error, fe.bound.value, fe.bound.hypotheses_hold(), fe.truncated});
    }
  });

  for (const auto& s : report.samples) report.disconnected += s.disconnected ? 1 : 0;
  fit_all(report);
  report.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

std::vector<AssertionResult> evaluate_assertions(const ConvergenceReport& report) {
  std::vector<AssertionResult> out;
  const auto& cfg = report.config;
  auto band = [&](const std::string& metric, double lo, double hi, double min_r2 = -1.0) {
    const MetricFit* f = report.fit(metric);
    if (!f) {
      if (cfg.ns.size() >= 3) out.push_back({metric + "_slope", false, metric + ": too few connected n values to fit"});
      return;
    }
    std::ostringstream msg;
    msg << metric << " slope " << f->fit.slope << " (band [" << lo << ", " << hi << "], R2 " << f->fit.r2 << ")";
    const bool ok = f->fit.slope >= lo && f->fit.slope <= hi && f->fit.r2 >= min_r2;
    out.push_back({metric + "_slope", ok, msg.str()});
  };

  if (cfg.synthetic_rate) {
    const double r = *cfg.synthetic_rate;
    band("alpha", -r - 1e-9, -r + 1e-9);
    return out;
  }

  band("gamma_sq", -0.65, -0.35);
  if (cfg.family == GraphFamily::dense_gaussian) {
    band("alpha", -0.45, -0.13);
    band("beta", -std::numeric_limits<double>::infinity(), 0.0, 0.6);
  } else {
    band("alpha", -0.40, -0.05);
    band("beta", -0.40, -0.05);
    Index late = 0, late_disc = 0;
    for (const auto& s : report.samples)
      if (s.n >= 512) {
        ++late;
        late_disc += s.disconnected ? 1 : 0;
      }
    if (late > 0) {
      const double frac = static_cast<double>(late_disc) / static_cast<double>(late);
      out.push_back({"disconnected_fraction", frac < 0.10,
                     "disconnected fraction at n >= 512: " + std::to_string(frac)});
    }
  }

  for (const std::string metric : {"alpha", "beta", "gamma"}) {
    const auto med = report.medians(metric);
    if (med.size() < 3) continue;
    int inversions = 0;
    for (std::size_t i = 1; i < med.size(); ++i) inversions += med[i].second > med[i - 1].second ? 1 : 0;
    out.push_back({metric + "_monotone", inversions <= 1,
                   metric + " median increases " + std::to_string(inversions) + " time(s) along the n-grid"});
  }

  Index pairs = 0, violations = 0, checked = 0, dominated = 0;
  for (const auto& s : report.samples) {
    pairs += s.gamma_pairs;
    violations += s.gamma_violations;
    for (const auto& f : s.filters)
      if (f.hypotheses) {
        ++checked;
        dominated += f.error <= f.bound ? 1 : 0;
      }
  }
  if (pairs > 0) {
    const double frac = static_cast<double>(violations) / static_cast<double>(pairs);
    out.push_back({"gamma_bound", frac <= 0.01, "inner-product bound violations: " + std::to_string(violations) +
                                                   " / " + std::to_string(pairs)});
  }
  out.push_back({"filter_dominance", dominated == checked,
                 "filter error <= bound in " + std::to_string(dominated) + " / " + std::to_string(checked) +
                     " samples with hypotheses satisfied"});
  return out;
}

}  // namespace mfcn
