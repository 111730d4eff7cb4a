#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "levykm/dictionary.hpp"
#include "levykm/model.hpp"
#include "levykm/parallel.hpp"
#include "levykm/regression.hpp"
#include "levykm/stable.hpp"

namespace levykm {

struct EstimationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Binning and jump-interval settings for the Levy stage. The 2N+2 geometric
// intervals are [eps, m eps), ..., [m^N eps, m^{N+1} eps) and their mirror
// images; the phase-space window is cut into Nc equal bins per dimension.
struct EstimationConfig {
  double epsilon = 0.5;
  double ratio_m = 5.0;
  int num_intervals = 1;  // N
  std::vector<int> nc_list = {10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20, 21, 22, 23, 24, 25};
  std::vector<double> z_min;  // per-dimension window; empty = data range
  std::vector<double> z_max;

  void validate() const {
    if (!(epsilon > 0.0)) throw std::invalid_argument("estimation: epsilon must be positive");
    if (!(ratio_m > 1.0)) throw std::invalid_argument("estimation: m must exceed 1");
    if (num_intervals < 1) throw std::invalid_argument("estimation: N must be >= 1");
    if (nc_list.empty()) throw std::invalid_argument("estimation: Nc sweep must be nonempty");
    for (int nc : nc_list)
      if (nc < 1) throw std::invalid_argument("estimation: every Nc must be >= 1");
  }

  // The workable band for the inner truncation is 10..50 times sqrt(h).
  void check_epsilon_band(double h, std::vector<std::string>* diag) const {
    const double root_h = std::sqrt(h);
    if (diag && (epsilon < 10.0 * root_h || epsilon > 50.0 * root_h))
      diag->push_back("epsilon " + std::to_string(epsilon) + " lies outside the band [10, 50] x sqrt(h) = [" +
                      std::to_string(10.0 * root_h) + ", " + std::to_string(50.0 * root_h) + "]");
  }
};

// Per-dimension, per-bin, per-interval event tallies. Counts are stored as
// reals so tests may inject exact expected counts.
struct JumpCounts {
  int dim = 0;  // 0-based dimension index
  int nc = 0;
  double z_lo = 0.0, z_hi = 0.0;
  std::vector<double> midpoints;   // nc entries
  std::vector<double> bin_count;   // M_l, nc entries
  Matrix pos, neg;                 // (N+1) x nc
};

namespace detail {

inline void window_for_dim(const PairDataset& data, const EstimationConfig& cfg, int dim,
                           double& lo, double& hi) {
  if (!cfg.z_min.empty() && !cfg.z_max.empty()) {
    if (cfg.z_min.size() <= static_cast<std::size_t>(dim) ||
        cfg.z_max.size() <= static_cast<std::size_t>(dim))
      throw std::invalid_argument("estimation: window needs one [z_min, z_max] per dimension");
    lo = cfg.z_min[dim];
    hi = cfg.z_max[dim];
  } else {
    lo = hi = data.z_at(0, dim);
    for (std::int64_t r = 1; r < data.rows; ++r) {
      lo = std::min(lo, data.z_at(r, dim));
      hi = std::max(hi, data.z_at(r, dim));
    }
  }
  if (!(hi > lo)) throw EstimationError("estimation window is empty for dimension " + std::to_string(dim + 1));
}

}  // namespace detail

// Tallies jump events of dimension `dim` into the half-open geometric
// intervals, binned by the start coordinate z_i. Rows with z_i outside the
// window are dropped from all tallies.
inline JumpCounts count_jump_events(const PairDataset& data, int dim, int nc,
                                    const EstimationConfig& cfg) {
  cfg.validate();
  if (data.rows < 1) throw EstimationError("count_jump_events: empty dataset");
  if (dim < 0 || dim >= data.n) throw std::invalid_argument("count_jump_events: bad dimension");

  JumpCounts counts;
  counts.dim = dim;
  counts.nc = nc;
  detail::window_for_dim(data, cfg, dim, counts.z_lo, counts.z_hi);
  const double width = (counts.z_hi - counts.z_lo) / nc;
  counts.midpoints.resize(nc);
  for (int l = 0; l < nc; ++l) counts.midpoints[l] = counts.z_lo + (l + 0.5) * width;
  counts.bin_count.assign(nc, 0.0);
  const int intervals = cfg.num_intervals + 1;
  counts.pos = Matrix::Zero(intervals, nc);
  counts.neg = Matrix::Zero(intervals, nc);

  std::vector<double> threshold(static_cast<std::size_t>(intervals) + 1);
  for (int k = 0; k <= intervals; ++k) threshold[k] = cfg.epsilon * std::pow(cfg.ratio_m, k);

  for (std::int64_t r = 0; r < data.rows; ++r) {
    const double z = data.z_at(r, dim);
    if (z < counts.z_lo || z > counts.z_hi) continue;
    int l = static_cast<int>((z - counts.z_lo) / width);
    l = std::clamp(l, 0, nc - 1);  // z == z_hi falls into the last bin
    counts.bin_count[l] += 1.0;
    const double y = data.x_at(r, dim) - z;
    const double mag = std::fabs(y);
    if (mag < threshold[0] || mag >= threshold[intervals]) continue;
    int k = 0;
    while (mag >= threshold[k + 1]) ++k;
    if (y > 0.0)
      counts.pos(k, l) += 1.0;
    else
      counts.neg(k, l) += 1.0;
  }
  return counts;
}

// Stability index from the count ratios: for every Nc in the sweep and every
// k = 1..N, alpha_k = ln(S_0 / S_k) / (k ln m) with S_k the bin-weighted count
// sums; the estimate is the mean over all contributing (Nc, k).
inline double estimate_alpha(std::span<const JumpCounts> counts, double ratio_m,
                             std::vector<std::string>* diag = nullptr) {
  double sum = 0.0;
  int used = 0;
  const double log_m = std::log(ratio_m);
  for (const JumpCounts& c : counts) {
    const int intervals = static_cast<int>(c.pos.rows());
    std::vector<double> weighted(static_cast<std::size_t>(intervals), 0.0);
    for (int k = 0; k < intervals; ++k)
      for (int l = 0; l < c.nc; ++l)
        if (c.bin_count[l] > 0.0) weighted[k] += (c.pos(k, l) + c.neg(k, l)) / c.bin_count[l];
    for (int k = 1; k < intervals; ++k) {
      if (!(weighted[0] > 0.0) || !(weighted[k] > 0.0)) {
        detail::note(diag, "estimate_alpha: empty interval sums for Nc = " + std::to_string(c.nc) +
                               ", k = " + std::to_string(k) + "; excluded");
        continue;
      }
      sum += std::log(weighted[0] / weighted[k]) / (k * log_m);
      ++used;
    }
  }
  if (used == 0) throw EstimationError("estimate_alpha: no usable (Nc, k) ratios");
  double alpha = sum / used;
  if (alpha <= 0.05 || alpha >= 1.95) {
    detail::note(diag, "estimate_alpha: estimate " + std::to_string(alpha) + " clamped into (0.05, 1.95)");
    alpha = std::clamp(alpha, 0.05 + 1e-12, 1.95 - 1e-12);
  }
  return alpha;
}

// Skewness from the pooled negative/positive count ratio rho over the whole
// sweep: beta = (1 - rho) / (1 + rho).
inline double estimate_beta(std::span<const JumpCounts> counts,
                            std::vector<std::string>* diag = nullptr) {
  double pos = 0.0, neg = 0.0;
  for (const JumpCounts& c : counts) {
    for (int k = 0; k < c.pos.rows(); ++k)
      for (int l = 0; l < c.nc; ++l)
        if (c.bin_count[l] > 0.0) {
          pos += c.pos(k, l) / c.bin_count[l];
          neg += c.neg(k, l) / c.bin_count[l];
        }
  }
  if (pos == 0.0 && neg == 0.0) throw EstimationError("estimate_beta: no jump events");
  if (pos == 0.0) {
    detail::note(diag, "estimate_beta: no positive jumps observed; beta = -1");
    return -1.0;
  }
  const double rho = neg / pos;
  return std::clamp((1.0 - rho) / (1.0 + rho), -1.0, 1.0);
}

struct SigmaPoint {
  double midpoint = 0.0;
  double sigma = 0.0;
  int nc = 0;
};

// Per-bin noise intensity: inverts the summed-count identity
//   sigma_l^a k_a a^{-1} eps^{-a} (1 - m^{-(N+1)a}) = (h M_l)^{-1} sum_k counts.
inline std::vector<SigmaPoint> estimate_sigma_bins(const JumpCounts& counts, double alpha_hat,
                                                   double h, const EstimationConfig& cfg,
                                                   std::vector<std::string>* diag = nullptr) {
  if (!(alpha_hat > 0.0) || !(alpha_hat < 2.0))
    throw std::invalid_argument("estimate_sigma_bins: alpha_hat must be in (0, 2)");
  if (!(h > 0.0)) throw std::invalid_argument("estimate_sigma_bins: h must be positive");
  const double k_a = stable_kernel_constant(alpha_hat);
  const double denom_scale = 1.0 - std::pow(cfg.ratio_m, -(cfg.num_intervals + 1) * alpha_hat);
  std::vector<SigmaPoint> out;
  out.reserve(static_cast<std::size_t>(counts.nc));
  for (int l = 0; l < counts.nc; ++l) {
    if (!(counts.bin_count[l] > 0.0)) {
      detail::note(diag, "estimate_sigma_bins: bin " + std::to_string(l) + " of Nc = " +
                             std::to_string(counts.nc) + " is empty; omitted");
      continue;
    }
    double events = 0.0;
    for (int k = 0; k < counts.pos.rows(); ++k) events += counts.pos(k, l) + counts.neg(k, l);
    if (!(events > 0.0)) {
      detail::note(diag, "estimate_sigma_bins: no jump events in bin " + std::to_string(l) +
                             " of Nc = " + std::to_string(counts.nc) + "; omitted");
      continue;
    }
    const double base = alpha_hat * std::pow(cfg.epsilon, alpha_hat) * events /
                        (k_a * h * counts.bin_count[l] * denom_scale);
    out.push_back({counts.midpoints[l], std::pow(base, 1.0 / alpha_hat), counts.nc});
  }
  return out;
}

// Fits a function through the per-bin sigma values pooled over the Nc sweep.
inline SparseFit fit_sigma_function(std::span<const SigmaPoint> points, const Dictionary& dict,
                                    const RegressionOptions& opt) {
  if (points.size() < dict.size())
    throw EstimationError("fit_sigma_function: need at least as many points as basis functions");
  Matrix A(static_cast<Eigen::Index>(points.size()), static_cast<Eigen::Index>(dict.size()));
  Vector B(static_cast<Eigen::Index>(points.size()));
  std::vector<double> row(dict.size());
  for (std::size_t r = 0; r < points.size(); ++r) {
    const double xi = points[r].midpoint;
    dict.eval_row(std::span<const double>(&xi, 1), row);
    for (std::size_t k = 0; k < dict.size(); ++k) A(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = row[k];
    B[static_cast<Eigen::Index>(r)] = points[r].sigma;
  }
  SparseFit fit = sparse_solve(A, B, opt);

  double lo = points[0].midpoint, hi = points[0].midpoint;
  for (const SigmaPoint& p : points) {
    lo = std::min(lo, p.midpoint);
    hi = std::max(hi, p.midpoint);
  }
  std::vector<double> basis(dict.size());
  for (int g = 0; g <= 100; ++g) {
    const double xi = lo + (hi - lo) * g / 100.0;
    dict.eval_row(std::span<const double>(&xi, 1), basis);
    double v = 0.0;
    for (std::size_t k = 0; k < dict.size(); ++k) v += basis[k] * fit.coefficients[static_cast<Eigen::Index>(k)];
    if (!(v > 0.0)) {
      fit.diagnostics.push_back("fit_sigma_function: fitted intensity is not positive at xi = " +
                                std::to_string(xi));
      break;
    }
  }
  return fit;
}

// Complete Levy-stage result: stable parameters per dimension, the pooled
// per-bin intensity values, and the fitted intensity functions.
struct LevyEstimate {
  std::vector<double> alpha;
  std::vector<double> beta;
  std::vector<std::vector<SigmaPoint>> sigma_points;
  std::vector<SparseFit> sigma_fit;
  std::vector<bool> channel_enabled;
  Dictionary sigma_dictionary;
  std::vector<std::string> diagnostics;

  double sigma_value(int dim, double xi) const {
    const SparseFit& fit = sigma_fit[dim];
    double v = 0.0;
    for (std::size_t k = 0; k < sigma_dictionary.size(); ++k)
      v += fit.coefficients[static_cast<Eigen::Index>(k)] *
           sigma_dictionary.eval_one(k, std::span<const double>(&xi, 1));
    return v;
  }

  // Estimate with every channel off: corrections vanish identically. Used
  // when learning drift/diffusion of a purely Gaussian system.
  static LevyEstimate disabled(int n) {
    LevyEstimate e;
    e.alpha.assign(n, 1.5);
    e.beta.assign(n, 0.0);
    e.sigma_points.resize(n);
    e.sigma_fit.resize(n);
    e.channel_enabled.assign(n, false);
    return e;
  }
};

inline LevyEstimate estimate_levy(const PairDataset& data, const EstimationConfig& cfg,
                                  const RegressionOptions& opt, int sigma_degree = 4) {
  cfg.validate();
  if (data.rows < 1) throw EstimationError("estimate_levy: empty dataset");
  LevyEstimate est;
  est.sigma_dictionary = Dictionary::monomials(1, sigma_degree);
  est.channel_enabled.assign(data.n, true);
  cfg.check_epsilon_band(data.h, &est.diagnostics);
  for (int nc : cfg.nc_list)
    if (nc > data.rows)
      est.diagnostics.push_back("estimate_levy: Nc = " + std::to_string(nc) +
                                " exceeds the number of rows");

  for (int dim = 0; dim < data.n; ++dim) {
    std::vector<JumpCounts> counts;
    counts.reserve(cfg.nc_list.size());
    for (int nc : cfg.nc_list) counts.push_back(count_jump_events(data, dim, nc, cfg));
    est.alpha.push_back(estimate_alpha(counts, cfg.ratio_m, &est.diagnostics));
    est.beta.push_back(estimate_beta(counts, &est.diagnostics));
    std::vector<SigmaPoint> points;
    for (const JumpCounts& c : counts) {
      auto part = estimate_sigma_bins(c, est.alpha[dim], data.h, cfg, &est.diagnostics);
      points.insert(points.end(), part.begin(), part.end());
    }
    RegressionOptions dim_opt = opt;
    dim_opt.seed = opt.seed + static_cast<std::uint64_t>(dim);
    est.sigma_fit.push_back(fit_sigma_function(points, est.sigma_dictionary, dim_opt));
    est.sigma_points.push_back(std::move(points));
  }
  return est;
}

// Rotationally symmetric variant: events on ||x - z||_2 binned by ||z||_2,
// with the n-dimensional surface constant S_{n-1} c(n, alpha).
struct IsotropicEstimate {
  double alpha = 0.0;
  std::vector<SigmaPoint> sigma;
  std::vector<std::string> diagnostics;
};

// Radial tallies: events on ||x - z||_2 in the geometric intervals, binned by
// ||z||_2 over [0, r_max). The `neg` tensor stays zero.
inline JumpCounts count_radial_events(const PairDataset& data, int nc,
                                      const EstimationConfig& cfg) {
  cfg.validate();
  if (data.rows < 1) throw EstimationError("count_radial_events: empty dataset");
  const int n = data.n;

  double r_max = 0.0;
  if (!cfg.z_max.empty()) {
    r_max = cfg.z_max[0];
  } else {
    for (std::int64_t r = 0; r < data.rows; ++r) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += data.z_at(r, i) * data.z_at(r, i);
      r_max = std::max(r_max, std::sqrt(s) * (1.0 + 1e-12));
    }
  }
  if (!(r_max > 0.0)) throw EstimationError("count_radial_events: degenerate radial window");

  const int intervals = cfg.num_intervals + 1;
  const double width = r_max / nc;
  JumpCounts counts;
  counts.nc = nc;
  counts.z_lo = 0.0;
  counts.z_hi = r_max;
  counts.midpoints.resize(nc);
  for (int l = 0; l < nc; ++l) counts.midpoints[l] = (l + 0.5) * width;
  counts.bin_count.assign(nc, 0.0);
  counts.pos = Matrix::Zero(intervals, nc);
  counts.neg = Matrix::Zero(intervals, nc);

  std::vector<double> threshold(static_cast<std::size_t>(intervals) + 1);
  for (int k = 0; k <= intervals; ++k) threshold[k] = cfg.epsilon * std::pow(cfg.ratio_m, k);

  for (std::int64_t r = 0; r < data.rows; ++r) {
    double z2 = 0.0, y2 = 0.0;
    for (int i = 0; i < n; ++i) {
      z2 += data.z_at(r, i) * data.z_at(r, i);
      const double d = data.x_at(r, i) - data.z_at(r, i);
      y2 += d * d;
    }
    const double zr = std::sqrt(z2);
    if (zr >= r_max) continue;
    const int l = std::min(static_cast<int>(zr / width), nc - 1);
    counts.bin_count[l] += 1.0;
    const double mag = std::sqrt(y2);
    if (mag < threshold[0] || mag >= threshold[intervals]) continue;
    int k = 0;
    while (mag >= threshold[k + 1]) ++k;
    counts.pos(k, l) += 1.0;
  }
  return counts;
}

// Inversion of the radial count identities with the n-dimensional surface
// constant S_{n-1} c(n, alpha); n = 1 recovers the anisotropic formula with
// the two signed tallies pooled.
inline IsotropicEstimate estimate_isotropic_from_counts(const JumpCounts& counts, int n,
                                                        const EstimationConfig& cfg, double h) {
  IsotropicEstimate est;
  est.alpha = estimate_alpha(std::span<const JumpCounts>(&counts, 1), cfg.ratio_m, &est.diagnostics);

  const double constant = unit_sphere_area(n) * isotropic_kernel_constant(n, est.alpha);
  const double denom_scale = 1.0 - std::pow(cfg.ratio_m, -(cfg.num_intervals + 1) * est.alpha);
  const int intervals = cfg.num_intervals + 1;
  for (int l = 0; l < counts.nc; ++l) {
    if (!(counts.bin_count[l] > 0.0)) continue;
    double events = 0.0;
    for (int k = 0; k < intervals; ++k) events += counts.pos(k, l) + counts.neg(k, l);
    if (!(events > 0.0)) {
      est.diagnostics.push_back("estimate_isotropic: no jump events in radial bin " + std::to_string(l));
      continue;
    }
    const double base = est.alpha * std::pow(cfg.epsilon, est.alpha) * events /
                        (constant * h * counts.bin_count[l] * denom_scale);
    est.sigma.push_back({counts.midpoints[l], std::pow(base, 1.0 / est.alpha), counts.nc});
  }
  if (est.sigma.empty()) throw EstimationError("estimate_isotropic: no jump events observed");
  return est;
}

inline IsotropicEstimate estimate_isotropic(const PairDataset& data, const EstimationConfig& cfg,
                                            int nc, double h) {
  return estimate_isotropic_from_counts(count_radial_events(data, nc, cfg), data.n, cfg, h);
}

}  // namespace levykm
