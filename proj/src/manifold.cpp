#include "mfcn/manifold.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <random>
#include <tuple>

namespace mfcn {

DensitySpec DensitySpec::cosine(double a) {
  if (!(a >= 0.0 && a <= 0.9)) throw ConfigError("cosine tilt must lie in [0, 0.9]");
  return {DensityKind::cosine_tilt, a};
}

double DensitySpec::relative(double first_angle) const {
  return 1.0 + a() * std::cos(first_angle);
}

int ManifoldSpec::ambient_dim() const {
  switch (kind) {
    case ManifoldKind::circle: return 2;
    case ManifoldKind::sphere: return 3;
    case ManifoldKind::flat_torus: return 4;
  }
  return 0;
}

int ManifoldSpec::intrinsic_dim() const { return kind == ManifoldKind::circle ? 1 : 2; }

double ManifoldSpec::volume() const {
  switch (kind) {
    case ManifoldKind::circle: return kTwoPi;
    case ManifoldKind::sphere: return 2.0 * kTwoPi;
    case ManifoldKind::flat_torus: return kTwoPi * kTwoPi;
  }
  return 0.0;
}

double ManifoldSpec::density_at(std::span<const double> intrinsic) const {
  return density.relative(intrinsic[0]) / volume();
}

std::string to_string(ManifoldKind k) {
  switch (k) {
    case ManifoldKind::circle: return "circle";
    case ManifoldKind::sphere: return "sphere";
    case ManifoldKind::flat_torus: return "torus";
  }
  return "?";
}

ManifoldKind parse_manifold_kind(const std::string& s) {
  if (s == "circle") return ManifoldKind::circle;
  if (s == "sphere") return ManifoldKind::sphere;
  if (s == "torus" || s == "flat_torus") return ManifoldKind::flat_torus;
  throw ConfigError("unknown manifold '" + s + "'");
}

std::string to_string(const DensitySpec& d) {
  if (d.kind == DensityKind::uniform) return "uniform";
  std::ostringstream os;
  os << "cosine:" << std::setprecision(17) << d.tilt;
  return os.str();
}

DensitySpec parse_density(const std::string& s) {
  if (s == "uniform") return DensitySpec::uniform();
  if (s.rfind("cosine:", 0) == 0) {
    std::size_t used = 0;
    double a = 0.0;
    try {
      a = std::stod(s.substr(7), &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size() - 7) throw ConfigError("bad cosine density '" + s + "'");
    return DensitySpec::cosine(a);
  }
  throw ConfigError("unknown density '" + s + "' (expected uniform or cosine:<a>)");
}

std::string to_string(ScaleMode m) {
  switch (m) {
    case ScaleMode::laplace_beltrami: return "LB";
    case ScaleMode::eps_uniform: return "eps_uniform";
    case ScaleMode::knn_uniform: return "knn_uniform";
  }
  return "?";
}

void embed(ManifoldKind kind, std::span<const double> a, std::span<double> x) {
  switch (kind) {
    case ManifoldKind::circle:
      x[0] = std::cos(a[0]);
      x[1] = std::sin(a[0]);
      break;
    case ManifoldKind::sphere:
      x[0] = std::sin(a[0]) * std::cos(a[1]);
      x[1] = std::sin(a[0]) * std::sin(a[1]);
      x[2] = std::cos(a[0]);
      break;
    case ManifoldKind::flat_torus:
      x[0] = std::cos(a[0]);
      x[1] = std::sin(a[0]);
      x[2] = std::cos(a[1]);
      x[3] = std::sin(a[1]);
      break;
  }
}

namespace {

// Inverse CDF of (1 + a cos t) / (2 pi) on [0, 2 pi).
double tilted_circle_angle(double u, double a) {
  const double target = kTwoPi * u;
  double lo = 0.0, hi = kTwoPi;
  double t = target;
  for (int it = 0; it < 100; ++it) {
    const double g = t + a * std::sin(t) - target;
    if (g > 0) hi = t; else lo = t;
    const double step = g / (1.0 + a * std::cos(t));
    double next = t - step;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - t) <= 1e-15 * kTwoPi) {
      t = next;
      break;
    }
    t = next;
  }
  return t;
}

}  // namespace

PointCloud make_cloud(const ManifoldSpec& spec, const RowMatrixXd& intrinsic, std::uint64_t seed) {
  if (intrinsic.cols() != spec.intrinsic_dim())
    throw ContractError("intrinsic coordinate width does not match the manifold");
  PointCloud cloud;
  cloud.manifold = spec;
  cloud.seed = seed;
  cloud.intrinsic = intrinsic;
  cloud.points.resize(intrinsic.rows(), spec.ambient_dim());
  for (Index i = 0; i < intrinsic.rows(); ++i)
    embed(spec.kind, cloud.angles(i),
          {cloud.points.data() + i * cloud.points.cols(), static_cast<std::size_t>(cloud.points.cols())});
  return cloud;
}

PointCloud sample_points(const ManifoldSpec& spec, Index n, std::uint64_t seed) {
  if (n < 1) throw ConfigError("sample_points requires n >= 1");
  const double a = spec.density.a();
  if (spec.density.kind == DensityKind::cosine_tilt && !(a >= 0.0 && a <= 0.9))
    throw ConfigError("cosine tilt must lie in [0, 0.9]");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  RowMatrixXd ang(n, spec.intrinsic_dim());

  for (Index i = 0; i < n; ++i) {
    switch (spec.kind) {
      case ManifoldKind::circle: {
        const double u = unif(rng);
        ang(i, 0) = a == 0.0 ? kTwoPi * u : tilted_circle_angle(u, a);
        break;
      }
      case ManifoldKind::sphere: {
        // Uniform proposal via z = cos(theta) ~ U[-1, 1]; constant envelope 1 + a.
        while (true) {
          const double z = 2.0 * unif(rng) - 1.0;
          const double phi = kTwoPi * unif(rng);
          if (a != 0.0 && unif(rng) * (1.0 + a) > 1.0 + a * z) continue;
          ang(i, 0) = std::acos(z);
          ang(i, 1) = phi;
          break;
        }
        break;
      }
      case ManifoldKind::flat_torus: {
        while (true) {
          const double t1 = kTwoPi * unif(rng);
          const double t2 = kTwoPi * unif(rng);
          if (a != 0.0 && unif(rng) * (1.0 + a) > 1.0 + a * std::cos(t1)) continue;
          ang(i, 0) = t1;
          ang(i, 1) = t2;
          break;
        }
        break;
      }
    }
  }
  return make_cloud(spec, ang, seed);
}

// ---------------------------------------------------------------------------
// Eigenfunctions

namespace {

double circle_factor(int k, int type, double t) {
  if (k == 0) return 1.0;
  return type == 1 ? std::sqrt(2.0) * std::cos(k * t) : std::sqrt(2.0) * std::sin(k * t);
}

double factorial_ratio(int l, int m) {  // (l - m)! / (l + m)!
  double r = 1.0;
  for (int v = l - m + 1; v <= l + m; ++v) r /= v;
  return r;
}

constexpr int kSphereMaxDegree = 3;
constexpr int kTorusMaxFrequency = 4;

struct TorusMode {
  int k, tk, m, tm;
  int eig() const { return k * k + m * m; }
};

const std::vector<TorusMode>& torus_modes() {
  static const std::vector<TorusMode> modes = [] {
    std::vector<TorusMode> out;
    // Only the complete spectral prefix (k^2 + m^2 <= 16) so index order equals
    // the true ascending eigenvalue order.
    const int cap = kTorusMaxFrequency * kTorusMaxFrequency;
    for (int k = 0; k <= kTorusMaxFrequency; ++k)
      for (int m = 0; m <= kTorusMaxFrequency; ++m) {
        if (k * k + m * m > cap) continue;
        const std::vector<int> tks = k == 0 ? std::vector<int>{0} : std::vector<int>{1, 2};
        const std::vector<int> tms = m == 0 ? std::vector<int>{0} : std::vector<int>{1, 2};
        for (int tk : tks)
          for (int tm : tms) out.push_back({k, tk, m, tm});
      }
    std::stable_sort(out.begin(), out.end(), [](const TorusMode& x, const TorusMode& y) {
      return std::make_tuple(x.eig(), x.k, x.m, x.tk, x.tm) <
             std::make_tuple(y.eig(), y.k, y.m, y.tk, y.tm);
    });
    return out;
  }();
  return modes;
}

}  // namespace

double EigenFunction::operator()(std::span<const double> x) const {
  switch (kind_) {
    case ManifoldKind::circle:
      return circle_factor(f1_, t1_, x[0]);
    case ManifoldKind::sphere: {
      const int l = f1_, m = t1_ == 0 ? 0 : f2_;
      const double c = std::cos(x[0]);
      if (m == 0) return std::sqrt(2.0 * l + 1.0) * std::legendre(l, c);
      const double norm = std::sqrt(2.0 * (2.0 * l + 1.0) * factorial_ratio(l, m));
      const double p = std::assoc_legendre(l, m, c);
      return norm * p * (t1_ == 1 ? std::cos(m * x[1]) : std::sin(m * x[1]));
    }
    case ManifoldKind::flat_torus:
      return circle_factor(f1_, t1_, x[0]) * circle_factor(f2_, t2_, x[1]);
  }
  return 0.0;
}

int implemented_eigenpairs(ManifoldKind kind) {
  switch (kind) {
    case ManifoldKind::circle: return std::numeric_limits<int>::max();
    case ManifoldKind::sphere: return (kSphereMaxDegree + 1) * (kSphereMaxDegree + 1);
    case ManifoldKind::flat_torus: return static_cast<int>(torus_modes().size());
  }
  return 0;
}

EigenFunction manifold_eigenpair(const ManifoldSpec& spec, int i) {
  if (!spec.density.is_uniform())
    throw ConfigError("analytic eigenbasis is only available for uniform density");
  if (i < 1 || i > implemented_eigenpairs(spec.kind))
    throw RangeError("eigenpair index " + std::to_string(i) + " outside implemented range for " +
                     to_string(spec.kind));
  switch (spec.kind) {
    case ManifoldKind::circle: {
      const int k = i / 2;
      const int type = i == 1 ? 0 : (i % 2 == 0 ? 1 : 2);
      return {spec.kind, i, static_cast<double>(k) * k, k, type, 0, 0};
    }
    case ManifoldKind::sphere: {
      int l = 0;
      while ((l + 1) * (l + 1) < i) ++l;
      const int pos = i - l * l - 1;  // 0 .. 2l
      const int m = (pos + 1) / 2;
      const int type = pos == 0 ? 0 : (pos % 2 == 1 ? 1 : 2);
      // f1 = l, t1 = type, f2 = |m|
      return {spec.kind, i, static_cast<double>(l) * (l + 1), l, type, m, 0};
    }
    case ManifoldKind::flat_torus: {
      const auto& md = torus_modes()[static_cast<std::size_t>(i - 1)];
      return {spec.kind, i, static_cast<double>(md.eig()), md.k, md.tk, md.m, md.tm};
    }
  }
  throw RangeError("unknown manifold");
}

std::vector<EigenFunction> manifold_basis(const ManifoldSpec& spec, int count) {
  std::vector<EigenFunction> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 1; i <= count; ++i) out.push_back(manifold_eigenpair(spec, i));
  return out;
}

std::vector<IndexRange> continuum_clusters(const ManifoldSpec& spec, int count) {
  std::vector<IndexRange> out;
  const auto basis = manifold_basis(spec, count);
  for (int i = 0; i < count; ++i) {
    if (out.empty() || basis[static_cast<std::size_t>(i)].eigenvalue() !=
                           basis[static_cast<std::size_t>(out.back().start)].eigenvalue())
      out.push_back({i, 1});
    else
      ++out.back().size;
  }
  return out;
}

double scale_factor(const ManifoldSpec& spec, ScaleMode mode) {
  const double rho = 1.0 / spec.volume();
  const double d = spec.intrinsic_dim();
  switch (mode) {
    case ScaleMode::laplace_beltrami: return 1.0;
    case ScaleMode::eps_uniform: return rho / 2.0;
    case ScaleMode::knn_uniform: return std::pow(rho, -2.0 / d) / 2.0;
  }
  return 1.0;
}

VectorXd evaluate_Pn(const ScalarField& f, const PointCloud& cloud) {
  return evaluate_Pn_with(f, cloud);
}

// ---------------------------------------------------------------------------
// Quadrature

void gauss_legendre(int m, VectorXd& nodes, VectorXd& weights) {
  nodes.resize(m);
  weights.resize(m);
  for (int i = 0; i < m; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (m + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= m; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = m * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= m; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = m * (x * p1 - p0) / (x * x - 1.0);
    nodes(i) = x;
    weights(i) = 2.0 / ((1.0 - x * x) * dp * dp);
  }
}

QuadratureRule quadrature_rule(const ManifoldSpec& spec, const QuadratureResolution& res) {
  QuadratureRule rule;
  switch (spec.kind) {
    case ManifoldKind::circle: {
      const int K = res.circle_nodes;
      rule.nodes.resize(K, 1);
      rule.weights.resize(K);
      for (int k = 0; k < K; ++k) {
        rule.nodes(k, 0) = kTwoPi * k / K;
        rule.weights(k) = spec.density.relative(rule.nodes(k, 0)) / K;
      }
      break;
    }
    case ManifoldKind::sphere: {
      VectorXd x, w;
      gauss_legendre(res.sphere_polar, x, w);
      const int M = res.sphere_azimuth;
      rule.nodes.resize(static_cast<Index>(res.sphere_polar) * M, 2);
      rule.weights.resize(rule.nodes.rows());
      Index r = 0;
      for (int i = 0; i < res.sphere_polar; ++i)
        for (int k = 0; k < M; ++k, ++r) {
          rule.nodes(r, 0) = std::acos(x(i));
          rule.nodes(r, 1) = kTwoPi * k / M;
          rule.weights(r) = 0.5 * w(i) / M * spec.density.relative(rule.nodes(r, 0));
        }
      break;
    }
    case ManifoldKind::flat_torus: {
      const int K = res.torus_nodes;
      rule.nodes.resize(static_cast<Index>(K) * K, 2);
      rule.weights.resize(rule.nodes.rows());
      Index r = 0;
      for (int i = 0; i < K; ++i)
        for (int k = 0; k < K; ++k, ++r) {
          rule.nodes(r, 0) = kTwoPi * i / K;
          rule.nodes(r, 1) = kTwoPi * k / K;
          rule.weights(r) = spec.density.relative(rule.nodes(r, 0)) / (static_cast<double>(K) * K);
        }
      break;
    }
  }
  return rule;
}

double integrate(const ManifoldSpec& spec, const ScalarField& g, const QuadratureResolution& res) {
  const auto rule = quadrature_rule(spec, res);
  const auto d = static_cast<std::size_t>(rule.nodes.cols());
  double acc = 0.0;
  for (Index r = 0; r < rule.nodes.rows(); ++r)
    acc += rule.weights(r) * g({rule.nodes.data() + r * rule.nodes.cols(), d});
  return acc;
}

double quadrature(const ManifoldSpec& spec, const ScalarField& g, double q,
                  const QuadratureResolution& res) {
  if (!(q >= 1.0)) throw DomainError("quadrature exponent q must be >= 1");
  const double s = integrate(spec, [&](std::span<const double> x) { return std::pow(std::abs(g(x)), q); },
                             res);
  return std::pow(s, 1.0 / q);
}

ScalarField bandlimited_field(const ManifoldSpec& spec, const VectorXd& coeffs) {
  auto basis = manifold_basis(spec, static_cast<int>(coeffs.size()));
  return [basis = std::move(basis), coeffs](std::span<const double> x) {
    double acc = 0.0;
    for (std::size_t i = 0; i < basis.size(); ++i)
      if (coeffs(static_cast<Index>(i)) != 0.0) acc += coeffs(static_cast<Index>(i)) * basis[i](x);
    return acc;
  };
}

double continuum_filter_value(const ManifoldSpec& spec, const FilterSpec& w, const VectorXd& coeffs,
                              std::span<const double> point, double eigen_scale) {
  double acc = 0.0;
  for (Index i = 0; i < coeffs.size(); ++i) {
    if (coeffs(i) == 0.0) continue;
    const auto phi = manifold_eigenpair(spec, static_cast<int>(i + 1));
    acc += w(eigen_scale * phi.eigenvalue()) * coeffs(i) * phi(point);
  }
  return acc;
}

}  // namespace mfcn
