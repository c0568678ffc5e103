#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "mfcn/spectral.hpp"

namespace mfcn {

EigenSystem EigenSystem::leading(Index kappa) const {
  if (kappa < 0 || kappa > count()) throw RangeError("requested more eigenpairs than available");
  EigenSystem out;
  out.values = values.head(kappa);
  out.vectors = vectors.leftCols(kappa);
  out.complete = complete && kappa == size();
  out.residual_max = residual_max;
  return out;
}

std::vector<IndexRange> spectral_clusters(const VectorXd& v, double abs_tol, double rel_tol) {
  std::vector<IndexRange> out;
  for (Index i = 0; i < v.size(); ++i) {
    if (!out.empty()) {
      const double prev = v(i - 1);
      const double tol = std::max(abs_tol, rel_tol * std::max(std::abs(prev), std::abs(v(i))));
      if (std::abs(v(i) - prev) <= tol) {
        ++out.back().size;
        continue;
      }
    }
    out.push_back({i, 1});
  }
  return out;
}

namespace {

double residual_of(const MatrixXd& LV, const EigenSystem& es) {
  double worst = 0.0;
  for (Index i = 0; i < es.count(); ++i)
    worst = std::max(worst, (LV.col(i) - es.values(i) * es.vectors.col(i)).norm());
  return worst;
}

EigenSystem from_solver(const MatrixXd& L) {
  const double tol = 1e-10 * std::max(1.0, L.cwiseAbs().maxCoeff());
  if ((L - L.transpose()).cwiseAbs().maxCoeff() > tol)
    throw ContractError("eig_dense_sym: matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<MatrixXd> solver(L);
  if (solver.info() != Eigen::Success) throw ConvergenceError("dense symmetric eigensolver failed");
  EigenSystem es;
  es.values = solver.eigenvalues();
  es.vectors = solver.eigenvectors();
  es.complete = true;
  return es;
}

}  // namespace

double max_residual(const GraphLaplacian& L, const EigenSystem& es) {
  return residual_of(L.apply(es.vectors), es);
}

double max_residual(const MatrixXd& L, const EigenSystem& es) { return residual_of(L * es.vectors, es); }

EigenSystem eig_dense_sym(const MatrixXd& L) {
  EigenSystem es = from_solver(L);
  es.residual_max = max_residual(L, es);
  return es;
}

EigenSystem eig_dense_sym(const GraphLaplacian& L) {
  if (L.size() > kDenseLimit) throw ConfigError("dense eigensolve limited to n <= 4096");
  return eig_dense_sym(L.to_dense());
}

// ---------------------------------------------------------------------------
// Block Lanczos with full reorthogonalization.
//
// The basis Q and its image LQ are kept explicitly, so the projected matrix is
// formed as Q^T (LQ) rather than from recurrence coefficients. Rank-deficient
// blocks (invariant subspace reached) are topped up with random directions.
// When the basis is full the iteration restarts from the best Ritz vectors
// and continues from their residuals.

namespace {

class KrylovBasis {
 public:
  KrylovBasis(const GraphLaplacian& L, Index capacity, std::mt19937_64& rng)
      : L_(L), Q_(L.size(), capacity), LQ_(L.size(), capacity), rng_(rng) {}

  Index size() const { return m_; }
  Index capacity() const { return Q_.cols(); }
  auto basis() const { return Q_.leftCols(m_); }
  auto image() const { return LQ_.leftCols(m_); }

  void reset(const MatrixXd& V, const MatrixXd& LV) {
    m_ = V.cols();
    Q_.leftCols(m_) = V;
    LQ_.leftCols(m_) = LV;
  }

  // Orthonormalize `block` against the basis and append. Returns columns added.
  Index append(MatrixXd block) {
    const Index n = Q_.rows();
    const Index want = std::min<Index>(block.cols(), std::min(capacity(), n) - m_);
    if (want <= 0) return 0;
    Index added = 0;
    std::normal_distribution<double> normal;
    for (Index c = 0, attempts = 0; added < want && attempts < 4 * want + 8; ++attempts) {
      VectorXd v = c < block.cols() ? VectorXd(block.col(c++)) : VectorXd::NullaryExpr(n, [&] { return normal(rng_); });
      const double start = v.norm();
      if (start == 0.0) continue;
      for (int pass = 0; pass < 2; ++pass) {
        if (m_ > 0) v -= Q_.leftCols(m_) * (Q_.leftCols(m_).transpose() * v);
      }
      const double nv = v.norm();
      if (nv <= 1e-10 * start) continue;
      Q_.col(m_) = v / nv;
      LQ_.col(m_) = L_.apply(Q_.col(m_));
      ++m_;
      ++added;
    }
    return added;
  }

 private:
  const GraphLaplacian& L_;
  MatrixXd Q_, LQ_;
  Index m_ = 0;
  std::mt19937_64& rng_;
};

}  // namespace

EigenSystem eig_partial(const GraphLaplacian& L, Index kappa, const PartialEigOptions& opt) {
  const Index n = L.size();
  if (kappa < 1 || kappa > n) throw RangeError("eig_partial requires 1 <= kappa <= n");

  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> normal;
  const Index block = std::max<Index>(1, std::min(opt.block, n));
  const Index capacity = std::min(n, std::max(opt.max_basis, kappa + 3 * block));
  KrylovBasis K(L, capacity, rng);

  K.append(MatrixXd::NullaryExpr(n, block, [&] { return normal(rng); }));
  Index last_start = 0;

  EigenSystem best;
  int restarts = 0;
  while (true) {
    const Index before = K.size();
    // Expand with L applied to the most recent block.
    MatrixXd next = K.image().middleCols(last_start, before - last_start);
    last_start = before;
    K.append(std::move(next));

    const bool full = K.size() == std::min(capacity, n);
    const bool check = full || (K.size() - kappa) % (4 * block) < block || K.size() == n;
    if (!check && K.size() > before) continue;

    // Rayleigh-Ritz.
    const Index m = K.size();
    MatrixXd T = K.basis().transpose() * K.image();
    T = 0.5 * (T + T.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<MatrixXd> small(T);
    const Index take = std::min(kappa, m);
    const MatrixXd S = small.eigenvectors().leftCols(take);
    EigenSystem es;
    es.values = small.eigenvalues().head(take);
    es.vectors = K.basis() * S;
    const MatrixXd LV = K.image() * S;
    MatrixXd R = LV - es.vectors * es.values.asDiagonal();
    VectorXd res = R.colwise().norm();
    es.residual_max = res.size() ? res.maxCoeff() : 0.0;
    es.complete = kappa == n;

    const double target = opt.tol * std::max(1.0, std::abs(es.values(take - 1)));
    if ((take == kappa && es.residual_max <= target) || m == n) {
      if (m == n) es.residual_max = max_residual(L, es);
      return es;
    }
    if (!full && K.size() > before) continue;

    // Thick restart: keep kappa + block Ritz vectors, continue from residuals
    // of the unconverged ones.
    if (++restarts > opt.max_restarts) break;
    const Index keep = std::min(m - block, kappa + block);
    const MatrixXd Sk = small.eigenvectors().leftCols(keep);
    MatrixXd V = K.basis() * Sk;
    MatrixXd LVk = K.image() * Sk;
    // Re-orthonormalize the kept block to wash out drift.
    Eigen::HouseholderQR<MatrixXd> qr(V);
    MatrixXd Qk = qr.householderQ() * MatrixXd::Identity(n, keep);
    MatrixXd Rk = qr.matrixQR().topLeftCorner(keep, keep).triangularView<Eigen::Upper>();
    LVk = LVk * Rk.triangularView<Eigen::Upper>().solve(MatrixXd::Identity(keep, keep));
    K.reset(Qk, LVk);
    MatrixXd resid(n, 0);
    std::vector<Index> open;
    for (Index i = 0; i < take && static_cast<Index>(open.size()) < block; ++i)
      if (res(i) > target) open.push_back(i);
    resid.resize(n, static_cast<Index>(open.size()));
    for (std::size_t c = 0; c < open.size(); ++c) resid.col(static_cast<Index>(c)) = R.col(open[c]);
    last_start = K.size();
    K.append(resid);
    best = std::move(es);
  }

  if (opt.dense_fallback && n <= kDenseLimit) {
    EigenSystem full = eig_dense_sym(L);
    EigenSystem out = full.leading(kappa);
    out.complete = kappa == n;
    out.residual_max = max_residual(L, out);
    return out;
  }
  throw ConvergenceError("eig_partial did not converge within the restart budget");
}

bool filter_truncates(const EigenSystem& es, const FilterSpec& w) {
  if (es.complete || es.count() == es.size()) return false;
  if (w.kind() == FilterKind::ideal_lowpass && es.count() > 0 && w.cutoff() < es.values(es.count() - 1))
    return false;
  return true;
}

FilteredSignal apply_filter_checked(const EigenSystem& es, const FilterSpec& w, const VectorXd& x) {
  return {apply_filter(es, w, x), filter_truncates(es, w)};
}

}  // namespace mfcn
