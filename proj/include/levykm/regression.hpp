#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "levykm/dictionary.hpp"
#include "levykm/rng.hpp"

namespace levykm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Sparse regression result over a candidate dictionary.
struct SparseFit {
  Vector coefficients;                          // length K, exact zeros off-support
  std::vector<int> support;                     // indices of nonzero coefficients
  double residual = 0.0;                        // ||B - A c||_2^2 on the training data
  std::vector<std::pair<int, double>> cv_path;  // (q, delta[SSR_q]) when cross-validated
  std::vector<std::string> diagnostics;
};

namespace detail {

inline void note(std::vector<std::string>* diag, std::string msg) {
  if (diag) diag->push_back(std::move(msg));
}

// Least squares on selected columns, scattered back to a K-vector.
inline Vector ls_on_support(const Matrix& A, const Vector& B, const std::vector<int>& cols,
                            std::vector<std::string>* diag) {
  Vector full = Vector::Zero(A.cols());
  if (cols.empty()) return full;
  Matrix sub(A.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) sub.col(static_cast<Eigen::Index>(k)) = A.col(cols[k]);
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(sub);
  if (cod.rank() < sub.cols())
    note(diag, "least_squares: rank-deficient design (rank " + std::to_string(cod.rank()) + " of " +
                   std::to_string(sub.cols()) + "), returning minimum-norm solution");
  Vector c = cod.solve(B);
  for (std::size_t k = 0; k < cols.size(); ++k) full[cols[k]] = c[static_cast<Eigen::Index>(k)];
  return full;
}

}  // namespace detail

// Minimizer of ||B - A c||_2^2 by orthogonal factorization; minimum-norm
// solution with a diagnostic when the design is rank deficient.
inline Vector least_squares(const Matrix& A, const Vector& B,
                            std::vector<std::string>* diag = nullptr) {
  std::vector<int> all(static_cast<std::size_t>(A.cols()));
  std::iota(all.begin(), all.end(), 0);
  return detail::ls_on_support(A, B, all, diag);
}

// Iterative hard thresholding: fit, zero every coefficient with magnitude
// below lambda, refit on survivors, repeat until the support is stable.
inline SparseFit sindy(const Matrix& A, const Vector& B, double lambda) {
  if (lambda < 0.0) throw std::invalid_argument("sindy: lambda must be >= 0");
  SparseFit fit;
  std::vector<int> active(static_cast<std::size_t>(A.cols()));
  std::iota(active.begin(), active.end(), 0);
  Vector c = detail::ls_on_support(A, B, active, &fit.diagnostics);
  for (;;) {
    std::vector<int> kept;
    kept.reserve(active.size());
    for (int k : active)
      if (std::fabs(c[k]) >= lambda && c[k] != 0.0) kept.push_back(k);
    if (kept.size() == active.size()) break;
    active = std::move(kept);
    if (active.empty()) {
      fit.diagnostics.push_back("sindy: threshold eliminated every coefficient");
      c = Vector::Zero(A.cols());
      break;
    }
    c = detail::ls_on_support(A, B, active, &fit.diagnostics);
  }
  fit.coefficients = c;
  for (int k = 0; k < A.cols(); ++k)
    if (c[k] != 0.0) fit.support.push_back(k);
  fit.residual = (B - A * c).squaredNorm();
  return fit;
}

// Stepwise sparse regressor: full fit at q = 0, then repeatedly zero the
// smallest-magnitude surviving coefficient (ties to the lowest index) and
// refit. Entry q has exactly q zeroed coefficients; the last entry is empty.
inline std::vector<SparseFit> ssr_path(const Matrix& A, const Vector& B) {
  const int K = static_cast<int>(A.cols());
  if (K < 1) throw std::invalid_argument("ssr_path: need at least one column");
  std::vector<SparseFit> path;
  path.reserve(static_cast<std::size_t>(K) + 1);
  std::vector<int> active(static_cast<std::size_t>(K));
  std::iota(active.begin(), active.end(), 0);
  for (int q = 0; q <= K; ++q) {
    SparseFit fit;
    Vector c = detail::ls_on_support(A, B, active, &fit.diagnostics);
    fit.coefficients = c;
    fit.support = active;
    fit.residual = (B - A * c).squaredNorm();
    path.push_back(std::move(fit));
    if (active.empty()) break;
    int drop = active[0];
    double best = std::fabs(c[drop]);
    for (int k : active) {
      if (std::fabs(c[k]) < best) {
        best = std::fabs(c[k]);
        drop = k;
      }
    }
    active.erase(std::find(active.begin(), active.end(), drop));
  }
  return path;
}

// K_cv-fold cross-validation of the SSR path. Scores are per-fold residuals
// normalized by fold size; the fold assignment is a seeded shuffle, so a
// fixed seed reproduces scores exactly.
inline std::vector<std::pair<int, double>> cross_validation_scores(
    const Matrix& A, const Vector& B, int kcv, std::uint64_t seed,
    std::vector<std::string>* diag = nullptr) {
  const std::int64_t M = A.rows();
  const int K = static_cast<int>(A.cols());
  if (kcv < 2) throw std::invalid_argument("cross_validation_scores: need kcv >= 2");
  if (M < kcv) throw std::invalid_argument("cross_validation_scores: need at least kcv rows");

  std::vector<std::int64_t> order(static_cast<std::size_t>(M));
  std::iota(order.begin(), order.end(), 0);
  RngStream rng(seed, 0);
  for (std::int64_t i = M - 1; i > 0; --i) {
    const std::int64_t j = static_cast<std::int64_t>(rng.next_u64() % static_cast<std::uint64_t>(i + 1));
    std::swap(order[i], order[j]);
  }

  std::vector<double> sq_sum(static_cast<std::size_t>(K) + 1, 0.0);
  for (int f = 0; f < kcv; ++f) {
    const std::int64_t lo = f * M / kcv;
    const std::int64_t hi = (f + 1) * M / kcv;
    const std::int64_t m_test = hi - lo;
    const std::int64_t m_train = M - m_test;
    Matrix At(m_train, K), Av(m_test, K);
    Vector Bt(m_train), Bv(m_test);
    std::int64_t ti = 0, vi = 0;
    for (std::int64_t r = 0; r < M; ++r) {
      const std::int64_t src = order[r];
      if (r >= lo && r < hi) {
        Av.row(vi) = A.row(src);
        Bv[vi++] = B[src];
      } else {
        At.row(ti) = A.row(src);
        Bt[ti++] = B[src];
      }
    }
    std::vector<SparseFit> path = ssr_path(At, Bt);
    for (std::size_t q = 0; q < path.size(); ++q) {
      if (diag)
        for (const auto& d : path[q].diagnostics) diag->push_back("fold " + std::to_string(f) + ": " + d);
      sq_sum[q] += (Bv - Av * path[q].coefficients).squaredNorm() / static_cast<double>(m_test);
    }
  }

  std::vector<std::pair<int, double>> scores;
  scores.reserve(sq_sum.size());
  for (std::size_t q = 0; q < sq_sum.size(); ++q)
    scores.emplace_back(static_cast<int>(q), std::sqrt(sq_sum[q] / kcv));
  return scores;
}

// Sparsity choice at the transition of the score curve: the flat band is
// delta[q] <= tau_flat * min(delta), anchored at the path minimum so the
// usual dip from shedding spurious parameters does not widen it, and the
// sparsest model inside the band is selected. A following step of at least
// tau_jump marks the transition as abrupt; a gradual rise keeps the same
// choice but leaves a diagnostic.
inline int select_sparsity(std::span<const std::pair<int, double>> path, double tau_flat = 1.25,
                           double tau_jump = 2.0, std::vector<std::string>* diag = nullptr) {
  if (path.empty()) throw std::invalid_argument("select_sparsity: empty path");
  double peak = 0.0, lowest = path[0].second;
  for (const auto& [q, s] : path) {
    peak = std::max(peak, s);
    lowest = std::min(lowest, s);
  }
  const double floor = 1e-12 * peak + 1e-300;  // keeps ratios of near-zero scores tame

  const double band = tau_flat * (lowest + floor);
  std::size_t flat_end = 0;
  for (std::size_t i = 0; i < path.size(); ++i)
    if (path[i].second + floor <= band) flat_end = i;
  if (flat_end + 1 < path.size()) {
    const double jump =
        (path[flat_end + 1].second + floor) / (path[flat_end].second + floor);
    if (jump < tau_jump)
      detail::note(diag, "select_sparsity: transition at q = " +
                             std::to_string(path[flat_end].first) + " is gradual (ratio " +
                             std::to_string(jump) + ")");
  }
  return path[flat_end].first;
}

// Per-dimension bin counts for the binning preprocessor.
struct BinPreprocessConfig {
  std::vector<int> bins_per_dim;

  int total() const {
    int t = 1;
    for (int q : bins_per_dim) t *= q;
    return t;
  }
};

// Aggregates regression rows into weighted bin rows: dictionary values at the
// centroid of each nonempty bin and the within-bin mean target, both scaled by
// the bin's data share. Intended for n <= 3 only.
inline std::pair<Matrix, Vector> bin_preprocess(const Matrix& points, const Vector& B,
                                                const Dictionary& dict,
                                                const BinPreprocessConfig& cfg) {
  const std::int64_t M = points.rows();
  const int n = static_cast<int>(points.cols());
  if (n > 3) throw std::invalid_argument("bin_preprocess: binning is limited to n <= 3");
  if (cfg.bins_per_dim.size() != static_cast<std::size_t>(n))
    throw std::invalid_argument("bin_preprocess: need one bin count per dimension");
  for (int q : cfg.bins_per_dim)
    if (q < 1) throw std::invalid_argument("bin_preprocess: bin counts must be >= 1");
  if (M < 1) throw std::invalid_argument("bin_preprocess: empty input");

  std::vector<double> lo(n), hi(n);
  for (int i = 0; i < n; ++i) {
    lo[i] = points.col(i).minCoeff();
    hi[i] = points.col(i).maxCoeff();
  }
  const int total = cfg.total();
  std::vector<std::int64_t> count(static_cast<std::size_t>(total), 0);
  Matrix centroid = Matrix::Zero(total, n);
  Vector target = Vector::Zero(total);

  for (std::int64_t r = 0; r < M; ++r) {
    int flat = 0;
    for (int i = 0; i < n; ++i) {
      const int q = cfg.bins_per_dim[i];
      int b = 0;
      if (hi[i] > lo[i]) {
        b = static_cast<int>((points(r, i) - lo[i]) / (hi[i] - lo[i]) * q);
        b = std::clamp(b, 0, q - 1);
      }
      flat = flat * q + b;
    }
    ++count[flat];
    centroid.row(flat) += points.row(r);
    target[flat] += B[r];
  }

  int nonempty = 0;
  for (int b = 0; b < total; ++b)
    if (count[b] > 0) ++nonempty;

  Matrix A_q(nonempty, static_cast<Eigen::Index>(dict.size()));
  Vector B_q(nonempty);
  std::vector<double> row(dict.size());
  std::vector<double> center(n);
  int out = 0;
  for (int b = 0; b < total; ++b) {
    if (count[b] == 0) continue;
    const double w = static_cast<double>(count[b]) / static_cast<double>(M);
    for (int i = 0; i < n; ++i) center[i] = centroid(b, i) / count[b];
    dict.eval_row(center, row);
    for (std::size_t k = 0; k < dict.size(); ++k) A_q(out, static_cast<Eigen::Index>(k)) = w * row[k];
    B_q[out] = w * (target[b] / count[b]);
    ++out;
  }
  return {std::move(A_q), std::move(B_q)};
}

// Settings for the combined solver used by the sigma fit and the learners.
struct RegressionOptions {
  enum class Method { kSindy, kSsrCv };
  Method method = Method::kSsrCv;
  double lambda = 0.05;        // SINDy threshold on unit-RMS columns
  int kcv = 5;
  std::uint64_t seed = 0;
  double tau_flat = 1.25;
  double tau_jump = 2.0;
  bool normalize_columns = true;
};

// Dispatching solver. Columns are scaled to unit RMS before the sparsity
// machinery runs and the coefficients are unscaled afterwards, so thresholds
// are insensitive to the wildly different magnitudes of polynomial columns.
inline SparseFit sparse_solve(const Matrix& A, const Vector& B, const RegressionOptions& opt) {
  const int K = static_cast<int>(A.cols());
  Vector scale = Vector::Ones(K);
  Matrix As = A;
  if (opt.normalize_columns) {
    for (int k = 0; k < K; ++k) {
      const double rms = A.col(k).norm() / std::sqrt(static_cast<double>(A.rows()));
      if (rms > 0.0) {
        scale[k] = rms;
        As.col(k) /= rms;
      }
    }
  }

  SparseFit fit;
  if (opt.method == RegressionOptions::Method::kSindy) {
    fit = sindy(As, B, opt.lambda);
  } else {
    auto scores = cross_validation_scores(As, B, opt.kcv, opt.seed, &fit.diagnostics);
    const int q = select_sparsity(scores, opt.tau_flat, opt.tau_jump, &fit.diagnostics);
    std::vector<SparseFit> path = ssr_path(As, B);
    SparseFit chosen = std::move(path[static_cast<std::size_t>(q)]);
    chosen.cv_path = std::move(scores);
    for (auto& d : fit.diagnostics) chosen.diagnostics.push_back(std::move(d));
    fit = std::move(chosen);
  }

  for (int k = 0; k < K; ++k) fit.coefficients[k] /= scale[k];
  fit.residual = (B - A * fit.coefficients).squaredNorm();
  return fit;
}

}  // namespace levykm
