#pragma once

#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "mfcn/types.hpp"

namespace mfcn {

enum class FilterKind { heat, wavelet, ideal_lowpass, gcn_linear, poly_exp, custom_table };

/// Spectral filter response w : [0, inf) -> R.
///
///   heat           e^{-t lambda}
///   wavelet j      w_0 = 1 - e^{-lambda},  w_j = e^{-2^{j-1} lambda} - e^{-2^j lambda}
///   ideal_lowpass  1{lambda <= a}
///   gcn_linear     1 - lambda / 2
///   poly_exp       sum_q c_q e^{-q lambda}
///   custom_table   piecewise linear through (lambda, w) nodes, flat outside
class FilterSpec {
 public:
  static FilterSpec heat(double t);
  static FilterSpec wavelet(int j);
  static FilterSpec ideal_lowpass(double a);
  static FilterSpec gcn_linear();
  static FilterSpec poly_exp(std::vector<double> coeffs);
  static FilterSpec custom_table(std::vector<std::pair<double, double>> nodes);
  static FilterSpec identity() { return heat(0.0); }

  FilterKind kind() const { return kind_; }
  double t() const { return param_; }
  double cutoff() const { return param_; }
  int scale() const { return scale_; }
  const std::vector<double>& coeffs() const { return coeffs_; }
  const std::vector<std::pair<double, double>>& table() const { return table_; }

  double operator()(double lambda) const;

  template <typename Derived>
  VectorXd response(const Eigen::MatrixBase<Derived>& lambdas) const {
    VectorXd out(lambdas.size());
    for (Index i = 0; i < lambdas.size(); ++i) out(i) = (*this)(lambdas(i));
    return out;
  }

  /// Upper bound on sup |w| over [0, inf). Exact for all kinds except
  /// poly_exp, where it is the coefficient l1 norm.
  double sup_norm_bound() const;

  /// Compact textual form, e.g. "heat:t=1", "wavelet:j=2", "poly:1,-1,0,0,0".
  std::string describe() const;
  static FilterSpec parse(const std::string& text);

  friend bool operator==(const FilterSpec&, const FilterSpec&) = default;

 private:
  FilterKind kind_ = FilterKind::heat;
  double param_ = 0.0;
  int scale_ = 0;
  std::vector<double> coeffs_;
  std::vector<std::pair<double, double>> table_;
};

struct LipschitzBound {
  double value = 0.0;
  bool unbounded = false;
  // Multiplier already folded into `value` when the bound came from sampling.
  double safety_factor = 1.0;
};

/// Lipschitz constant of w restricted to [lo, hi]; hi may be +inf.
LipschitzBound lipschitz_bound(const FilterSpec& w, double lo,
                               double hi = std::numeric_limits<double>::infinity());

/// Wavelet bank w_0..w_J.
std::vector<FilterSpec> wavelet_bank(int J);

/// J poly_exp filters from a J x 5 coefficient table (one row per filter).
std::vector<FilterSpec> dlf_poly_filterbank(const MatrixXd& coeff_table);

}  // namespace mfcn
