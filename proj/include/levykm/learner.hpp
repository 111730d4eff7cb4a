#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "levykm/corrections.hpp"
#include "levykm/dictionary.hpp"
#include "levykm/estimate.hpp"
#include "levykm/model.hpp"
#include "levykm/regression.hpp"

namespace levykm {

// Settings for the drift/diffusion stage. The truncation cube half-width is
// independent of the Levy-stage epsilon.
struct LearnConfig {
  double epsilon = 1.0;
  int dict_degree = 3;
  RegressionOptions regression;
  bool binning = false;
  std::vector<int> bins_per_dim;  // used when binning is on (n <= 3)
};

struct FilterResult {
  PairDataset data;
  std::int64_t m_hat = 0;
};

// Keeps rows whose increment lies in the cube [-eps, eps]^n.
inline FilterResult filter_small_increments(const PairDataset& data, double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("filter_small_increments: epsilon must be positive");
  FilterResult out;
  out.data.n = data.n;
  out.data.h = data.h;
  out.data.seed = data.seed;
  out.data.model_fingerprint = data.model_fingerprint;
  for (std::int64_t r = 0; r < data.rows; ++r) {
    bool keep = true;
    for (int i = 0; i < data.n && keep; ++i)
      keep = std::fabs(data.x_at(r, i) - data.z_at(r, i)) <= epsilon;
    if (!keep) continue;
    for (int i = 0; i < data.n; ++i) {
      out.data.z.push_back(data.z_at(r, i));
      out.data.x.push_back(data.x_at(r, i));
    }
  }
  out.data.rows = static_cast<std::int64_t>(out.data.z.size()) / data.n;
  out.m_hat = out.data.rows;
  if (out.m_hat == 0)
    throw std::runtime_error("filter_small_increments: no rows survive the cube filter");
  return out;
}

// One assembled regression system. The target is kept in its three factors so
// tests can inspect the decomposition: b = probability_factor * raw - correction.
struct AssembledSystem {
  Matrix A;                  // dictionary at surviving start points
  Vector b;                  // final regression target
  Vector raw;                // h^{-1} increment moment per row
  Vector correction;         // R or S per row
  double probability_factor = 1.0;  // M_hat / M
  std::vector<std::int64_t> row_index;  // rows of the filtered dataset used
  std::vector<std::string> diagnostics;
};

namespace detail {

enum class MomentKind { kDrift, kDiffusion };

inline AssembledSystem assemble_system(const PairDataset& filtered, std::int64_t total_rows,
                                       const LevyEstimate& levy, const Dictionary& dict, int i,
                                       int j, double epsilon, MomentKind kind) {
  if (filtered.rows < 1) throw std::runtime_error("assemble: empty filtered dataset");
  AssembledSystem sys;
  sys.probability_factor = static_cast<double>(filtered.rows) / static_cast<double>(total_rows);
  const double inv_h = 1.0 / filtered.h;
  const int corr_dim = i;  // corrections always use the first index of the pair

  std::vector<std::int64_t> rows;
  std::vector<double> raws, corrs;
  rows.reserve(static_cast<std::size_t>(filtered.rows));
  std::int64_t dropped = 0;
  for (std::int64_t r = 0; r < filtered.rows; ++r) {
    double corr = 0.0;
    if (levy.channel_enabled[corr_dim] && (kind == MomentKind::kDiffusion ? i == j : true)) {
      const double sigma = levy.sigma_value(corr_dim, filtered.z_at(r, corr_dim));
      if (!(sigma > 0.0)) {
        ++dropped;
        continue;
      }
      const CorrectionInput in{levy.alpha[corr_dim], levy.beta[corr_dim], sigma, epsilon};
      corr = kind == MomentKind::kDrift ? drift_correction(in) : diffusion_correction(in);
    }
    double raw;
    if (kind == MomentKind::kDrift) {
      raw = inv_h * (filtered.x_at(r, i) - filtered.z_at(r, i));
    } else {
      raw = inv_h * (filtered.x_at(r, i) - filtered.z_at(r, i)) *
            (filtered.x_at(r, j) - filtered.z_at(r, j));
    }
    rows.push_back(r);
    raws.push_back(raw);
    corrs.push_back(corr);
  }
  if (dropped > 0)
    sys.diagnostics.push_back("assemble: dropped " + std::to_string(dropped) +
                              " rows where the fitted intensity was not positive");
  if (rows.empty()) throw std::runtime_error("assemble: no usable rows");

  const std::int64_t m = static_cast<std::int64_t>(rows.size());
  sys.A.resize(m, static_cast<Eigen::Index>(dict.size()));
  sys.b.resize(m);
  sys.raw.resize(m);
  sys.correction.resize(m);
  std::vector<double> dict_row(dict.size());
  for (std::int64_t r = 0; r < m; ++r) {
    dict.eval_row(filtered.z_row(rows[r]), dict_row);
    for (std::size_t k = 0; k < dict.size(); ++k)
      sys.A(r, static_cast<Eigen::Index>(k)) = dict_row[k];
    sys.raw[r] = raws[r];
    sys.correction[r] = corrs[r];
    sys.b[r] = sys.probability_factor * raws[r] - corrs[r];
  }
  sys.row_index = std::move(rows);
  return sys;
}

inline SparseFit solve_assembled(const AssembledSystem& sys, const PairDataset& filtered,
                                 const Dictionary& dict, const LearnConfig& cfg,
                                 std::uint64_t seed_offset) {
  RegressionOptions opt = cfg.regression;
  opt.seed += seed_offset;
  SparseFit fit;
  if (cfg.binning) {
    Matrix pts(static_cast<Eigen::Index>(sys.row_index.size()), filtered.n);
    for (std::size_t r = 0; r < sys.row_index.size(); ++r)
      for (int i = 0; i < filtered.n; ++i) pts(static_cast<Eigen::Index>(r), i) = filtered.z_at(sys.row_index[r], i);
    BinPreprocessConfig bins;
    bins.bins_per_dim = cfg.bins_per_dim.empty()
                            ? std::vector<int>(static_cast<std::size_t>(filtered.n), 8)
                            : cfg.bins_per_dim;
    auto [aq, bq] = bin_preprocess(pts, sys.b, dict, bins);
    // The aggregated rows decide the support; the coefficients are then refit
    // on the raw rows, which carry none of the bin-centroid discretization.
    fit = sparse_solve(aq, bq, opt);
    const Vector refit = detail::ls_on_support(sys.A, sys.b, fit.support, &fit.diagnostics);
    fit.coefficients = refit;
    fit.residual = (sys.b - sys.A * refit).squaredNorm();
  } else {
    fit = sparse_solve(sys.A, sys.b, opt);
  }
  for (const std::string& d : sys.diagnostics) fit.diagnostics.push_back(d);
  return fit;
}

}  // namespace detail

// Drift system of dimension i (0-based):
//   A c_i = B_i,  B_i = (M_hat/M) h^{-1} (x_i - z_i) - R_i(z).
inline AssembledSystem assemble_drift_system(const PairDataset& filtered, std::int64_t total_rows,
                                             const LevyEstimate& levy, const Dictionary& dict,
                                             int i, double epsilon) {
  return detail::assemble_system(filtered, total_rows, levy, dict, i, i, epsilon,
                                 detail::MomentKind::kDrift);
}

// Diffusion system of the unordered pair (i, j), i <= j:
//   A d_ij = B_ij,  B_ij = (M_hat/M) h^{-1} (x_i - z_i)(x_j - z_j) - S_ij(z),
// where S_ij vanishes off the diagonal.
inline AssembledSystem assemble_diffusion_system(const PairDataset& filtered,
                                                 std::int64_t total_rows, const LevyEstimate& levy,
                                                 const Dictionary& dict, int i, int j,
                                                 double epsilon) {
  if (i > j) throw std::invalid_argument("assemble_diffusion_system: need i <= j");
  return detail::assemble_system(filtered, total_rows, levy, dict, i, j, epsilon,
                                 detail::MomentKind::kDiffusion);
}

// Learned drift and diffusion coefficients over a shared dictionary. The
// diffusion matrix is symmetric, so pairs are stored once for i <= j.
struct DriftDiffusionFit {
  Dictionary dictionary;
  std::vector<std::string> basis;
  std::vector<SparseFit> drift;      // n entries
  std::vector<SparseFit> diffusion;  // n(n+1)/2 entries, pair_index order
  double m_ratio = 1.0;
  std::int64_t m_hat = 0;

  static int pair_index(int i, int j, int n) {
    if (i > j) std::swap(i, j);
    return i * n - i * (i - 1) / 2 + (j - i);
  }
};

inline std::vector<SparseFit> learn_drift(const PairDataset& data, const LevyEstimate& levy,
                                          const LearnConfig& cfg) {
  FilterResult filtered = filter_small_increments(data, cfg.epsilon);
  const Dictionary dict = Dictionary::monomials(data.n, cfg.dict_degree);
  std::vector<SparseFit> fits;
  for (int i = 0; i < data.n; ++i) {
    AssembledSystem sys =
        assemble_drift_system(filtered.data, data.rows, levy, dict, i, cfg.epsilon);
    fits.push_back(detail::solve_assembled(sys, filtered.data, dict, cfg,
                                           static_cast<std::uint64_t>(i)));
  }
  return fits;
}

inline std::vector<SparseFit> learn_diffusion(const PairDataset& data, const LevyEstimate& levy,
                                              const LearnConfig& cfg) {
  FilterResult filtered = filter_small_increments(data, cfg.epsilon);
  const Dictionary dict = Dictionary::monomials(data.n, cfg.dict_degree);
  std::vector<SparseFit> fits;
  for (int i = 0; i < data.n; ++i)
    for (int j = i; j < data.n; ++j) {
      AssembledSystem sys =
          assemble_diffusion_system(filtered.data, data.rows, levy, dict, i, j, cfg.epsilon);
      fits.push_back(detail::solve_assembled(sys, filtered.data, dict, cfg,
                                             1000 + static_cast<std::uint64_t>(
                                                        DriftDiffusionFit::pair_index(i, j, data.n))));
    }
  return fits;
}

// Runs both learners on one shared cube filter.
inline DriftDiffusionFit learn_drift_diffusion(const PairDataset& data, const LevyEstimate& levy,
                                               const LearnConfig& cfg) {
  FilterResult filtered = filter_small_increments(data, cfg.epsilon);
  DriftDiffusionFit out;
  out.dictionary = Dictionary::monomials(data.n, cfg.dict_degree);
  out.basis = out.dictionary.names();
  out.m_hat = filtered.m_hat;
  out.m_ratio = static_cast<double>(filtered.m_hat) / static_cast<double>(data.rows);
  for (int i = 0; i < data.n; ++i) {
    AssembledSystem sys =
        assemble_drift_system(filtered.data, data.rows, levy, out.dictionary, i, cfg.epsilon);
    out.drift.push_back(detail::solve_assembled(sys, filtered.data, out.dictionary, cfg,
                                                static_cast<std::uint64_t>(i)));
  }
  for (int i = 0; i < data.n; ++i)
    for (int j = i; j < data.n; ++j) {
      AssembledSystem sys = assemble_diffusion_system(filtered.data, data.rows, levy,
                                                      out.dictionary, i, j, cfg.epsilon);
      out.diffusion.push_back(detail::solve_assembled(
          sys, filtered.data, out.dictionary, cfg,
          1000 + static_cast<std::uint64_t>(DriftDiffusionFit::pair_index(i, j, data.n))));
    }
  return out;
}

}  // namespace levykm
