#include "mfcn/filter.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mfcn {

FilterSpec FilterSpec::heat(double t) {
  if (!(t >= 0.0)) throw DomainError("heat filter requires t >= 0");
  FilterSpec f;
  f.kind_ = FilterKind::heat;
  f.param_ = t;
  return f;
}

FilterSpec FilterSpec::wavelet(int j) {
  if (j < 0) throw DomainError("wavelet scale must be >= 0");
  FilterSpec f;
  f.kind_ = FilterKind::wavelet;
  f.scale_ = j;
  return f;
}

FilterSpec FilterSpec::ideal_lowpass(double a) {
  if (!(a > 0.0)) throw DomainError("ideal low-pass cutoff must be > 0");
  FilterSpec f;
  f.kind_ = FilterKind::ideal_lowpass;
  f.param_ = a;
  return f;
}

FilterSpec FilterSpec::gcn_linear() {
  FilterSpec f;
  f.kind_ = FilterKind::gcn_linear;
  return f;
}

FilterSpec FilterSpec::poly_exp(std::vector<double> coeffs) {
  if (coeffs.empty()) throw DomainError("poly_exp filter needs at least one coefficient");
  FilterSpec f;
  f.kind_ = FilterKind::poly_exp;
  f.coeffs_ = std::move(coeffs);
  return f;
}

FilterSpec FilterSpec::custom_table(std::vector<std::pair<double, double>> nodes) {
  if (nodes.empty()) throw DomainError("custom_table filter needs at least one node");
  std::sort(nodes.begin(), nodes.end());
  for (std::size_t i = 1; i < nodes.size(); ++i)
    if (nodes[i].first == nodes[i - 1].first)
      throw DomainError("custom_table filter has duplicate abscissae");
  FilterSpec f;
  f.kind_ = FilterKind::custom_table;
  f.table_ = std::move(nodes);
  return f;
}

namespace {

double wavelet_value(int j, double lambda) {
  if (j == 0) return -std::expm1(-lambda);
  const double a = std::ldexp(1.0, j - 1);
  return std::exp(-a * lambda) - std::exp(-2.0 * a * lambda);
}

double table_value(const std::vector<std::pair<double, double>>& t, double x) {
  if (x <= t.front().first) return t.front().second;
  if (x >= t.back().first) return t.back().second;
  auto hi = std::upper_bound(t.begin(), t.end(), x,
                             [](double v, const auto& node) { return v < node.first; });
  auto lo = hi - 1;
  const double s = (x - lo->first) / (hi->first - lo->first);
  return lo->second + s * (hi->second - lo->second);
}

}  // namespace

double FilterSpec::operator()(double lambda) const {
  switch (kind_) {
    case FilterKind::heat:
      return std::exp(-param_ * lambda);
    case FilterKind::wavelet:
      return wavelet_value(scale_, lambda);
    case FilterKind::ideal_lowpass:
      return lambda <= param_ ? 1.0 : 0.0;
    case FilterKind::gcn_linear:
      return 1.0 - 0.5 * lambda;
    case FilterKind::poly_exp: {
      double acc = 0.0;
      const double base = std::exp(-lambda);
      double p = 1.0;
      for (double c : coeffs_) {
        acc += c * p;
        p *= base;
      }
      return acc;
    }
    case FilterKind::custom_table:
      return table_value(table_, lambda);
  }
  return 0.0;
}

double FilterSpec::sup_norm_bound() const {
  switch (kind_) {
    case FilterKind::heat:
    case FilterKind::ideal_lowpass:
      return 1.0;
    case FilterKind::wavelet: {
      if (scale_ == 0) return 1.0;
      // e^{-a x} - e^{-2a x} peaks at e^{-a x} = 1/2.
      return 0.25;
    }
    case FilterKind::gcn_linear:
      return std::numeric_limits<double>::infinity();
    case FilterKind::poly_exp: {
      double s = 0.0;
      for (double c : coeffs_) s += std::abs(c);
      return s;
    }
    case FilterKind::custom_table: {
      double s = 0.0;
      for (const auto& [x, y] : table_) s = std::max(s, std::abs(y));
      return s;
    }
  }
  return 0.0;
}

std::string FilterSpec::describe() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind_) {
    case FilterKind::heat:
      os << "heat:t=" << param_;
      break;
    case FilterKind::wavelet:
      os << "wavelet:j=" << scale_;
      break;
    case FilterKind::ideal_lowpass:
      os << "lowpass:a=" << param_;
      break;
    case FilterKind::gcn_linear:
      os << "gcn";
      break;
    case FilterKind::poly_exp:
      os << "poly:";
      for (std::size_t i = 0; i < coeffs_.size(); ++i) os << (i ? "," : "") << coeffs_[i];
      break;
    case FilterKind::custom_table:
      os << "table:";
      for (std::size_t i = 0; i < table_.size(); ++i)
        os << (i ? ";" : "") << table_[i].first << "," << table_[i].second;
      break;
  }
  return os.str();
}

namespace {

std::vector<double> split_numbers(const std::string& s, char sep) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    if (item.empty()) continue;
    std::size_t used = 0;
    double v = std::stod(item, &used);
    if (used != item.size()) throw ConfigError("bad number '" + item + "'");
    out.push_back(v);
  }
  return out;
}

double keyed_value(const std::string& body, const std::string& key) {
  const std::string prefix = key + "=";
  std::string value = body.rfind(prefix, 0) == 0 ? body.substr(prefix.size()) : body;
  std::size_t used = 0;
  double v = std::stod(value, &used);
  if (used != value.size()) throw ConfigError("bad filter parameter '" + body + "'");
  return v;
}

}  // namespace

FilterSpec FilterSpec::parse(const std::string& text) {
  const auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  const std::string body = colon == std::string::npos ? "" : text.substr(colon + 1);
  try {
    if (head == "heat") return heat(keyed_value(body, "t"));
    if (head == "wavelet") return wavelet(static_cast<int>(keyed_value(body, "j")));
    if (head == "lowpass") return ideal_lowpass(keyed_value(body, "a"));
    if (head == "gcn") return gcn_linear();
    if (head == "poly") return poly_exp(split_numbers(body, ','));
    if (head == "table") {
      std::vector<std::pair<double, double>> nodes;
      std::stringstream ss(body);
      std::string pair;
      while (std::getline(ss, pair, ';')) {
        auto xy = split_numbers(pair, ',');
        if (xy.size() != 2) throw ConfigError("table node needs lambda,w");
        nodes.emplace_back(xy[0], xy[1]);
      }
      return custom_table(std::move(nodes));
    }
  } catch (const std::invalid_argument&) {
    throw ConfigError("cannot parse filter '" + text + "'");
  }
  throw ConfigError("unknown filter kind '" + head + "'");
}

LipschitzBound lipschitz_bound(const FilterSpec& w, double lo, double hi) {
  if (lo > hi) throw DomainError("lipschitz_bound requires lo <= hi");
  lo = std::max(lo, 0.0);
  LipschitzBound out;
  switch (w.kind()) {
    case FilterKind::heat:
      out.value = w.t() * std::exp(-w.t() * lo);
      break;
    case FilterKind::gcn_linear:
      out.value = 0.5;
      break;
    case FilterKind::ideal_lowpass:
      if (w.cutoff() > lo && w.cutoff() < hi) {
        out.unbounded = true;
        out.value = std::numeric_limits<double>::infinity();
      }
      break;
    case FilterKind::wavelet: {
      const int j = w.scale();
      if (j == 0) {
        out.value = std::exp(-lo);  // w_0' = e^{-x}, decreasing
        break;
      }
      const double a = std::ldexp(1.0, j - 1);
      auto deriv = [a](double x) {
        return std::abs(-a * std::exp(-a * x) + 2.0 * a * std::exp(-2.0 * a * x));
      };
      // w_j'' vanishes only at x* = ln 4 / a.
      double best = deriv(lo);
      if (std::isfinite(hi)) best = std::max(best, deriv(hi));
      const double crit = std::log(4.0) / a;
      if (crit > lo && crit < hi) best = std::max(best, deriv(crit));
      out.value = best;
      break;
    }
    case FilterKind::poly_exp: {
      const auto& c = w.coeffs();
      const double span_hi = std::isfinite(hi) ? hi : lo + 40.0;
      constexpr int nodes = 10000;
      double best = 0.0;
      for (int i = 0; i <= nodes; ++i) {
        const double x = lo + (span_hi - lo) * i / nodes;
        double d = 0.0;
        for (std::size_t q = 1; q < c.size(); ++q)
          d -= static_cast<double>(q) * c[q] * std::exp(-static_cast<double>(q) * x);
        best = std::max(best, std::abs(d));
      }
      out.safety_factor = 1.05;
      out.value = best * out.safety_factor;
      break;
    }
    case FilterKind::custom_table: {
      const auto& t = w.table();
      double best = 0.0;
      for (std::size_t i = 1; i < t.size(); ++i) {
        if (t[i].first <= lo || t[i - 1].first >= hi) continue;
        best = std::max(best, std::abs((t[i].second - t[i - 1].second) /
                                       (t[i].first - t[i - 1].first)));
      }
      out.value = best;
      break;
    }
  }
  return out;
}

std::vector<FilterSpec> wavelet_bank(int J) {
  std::vector<FilterSpec> bank;
  for (int j = 0; j <= J; ++j) bank.push_back(FilterSpec::wavelet(j));
  return bank;
}

std::vector<FilterSpec> dlf_poly_filterbank(const MatrixXd& coeff_table) {
  if (coeff_table.cols() != 5) throw ContractError("DLF-POLY table must have 5 columns");
  std::vector<FilterSpec> bank;
  for (Index j = 0; j < coeff_table.rows(); ++j) {
    std::vector<double> c(5);
    for (Index q = 0; q < 5; ++q) c[static_cast<std::size_t>(q)] = coeff_table(j, q);
    bank.push_back(FilterSpec::poly_exp(std::move(c)));
  }
  return bank;
}

}  // namespace mfcn
