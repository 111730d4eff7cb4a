#pragma once

#include <cmath>
#include <vector>

#include "levykm/estimate.hpp"
#include "levykm/model.hpp"

namespace levykm {

// Per-dimension approximation errors against a known generating model:
//   e_alpha = |alpha_hat - alpha|, e_beta = |beta_hat - beta|,
//   e_sigma = mean absolute bin error / max |sigma| over the bins,
//   e_sr    = RMS error of the fitted intensity / max |sigma| on a grid.
struct ErrorReport {
  std::vector<double> e_alpha;
  std::vector<double> e_beta;
  std::vector<double> e_sigma;
  std::vector<double> e_sr;
};

inline ErrorReport compute_error_metrics(const LevyEstimate& levy, const ModelSpec& truth,
                                         int grid_points = 1001) {
  ErrorReport rep;
  std::vector<double> point(truth.n, 0.0);
  for (int i = 0; i < truth.n; ++i) {
    rep.e_alpha.push_back(std::fabs(levy.alpha[i] - truth.levy[i].alpha));
    rep.e_beta.push_back(std::fabs(levy.beta[i] - truth.levy[i].beta));

    double abs_sum = 0.0, sigma_max = 0.0;
    for (const SigmaPoint& p : levy.sigma_points[i]) {
      point[i] = p.midpoint;
      const double truth_val = truth.sigma[i].evaluate(point);
      abs_sum += std::fabs(p.sigma - truth_val);
      sigma_max = std::max(sigma_max, std::fabs(truth_val));
    }
    rep.e_sigma.push_back(levy.sigma_points[i].empty() || sigma_max == 0.0
                              ? 0.0
                              : abs_sum / levy.sigma_points[i].size() / sigma_max);

    double sq_sum = 0.0, grid_max = 0.0;
    for (int g = 0; g < grid_points; ++g) {
      const double xi = truth.domain[i][0] +
                        (truth.domain[i][1] - truth.domain[i][0]) * g / (grid_points - 1.0);
      point[i] = xi;
      const double truth_val = truth.sigma[i].evaluate(point);
      const double fit_val = levy.sigma_value(i, xi);
      sq_sum += (fit_val - truth_val) * (fit_val - truth_val);
      grid_max = std::max(grid_max, std::fabs(truth_val));
    }
    rep.e_sr.push_back(grid_max == 0.0 ? 0.0 : std::sqrt(sq_sum / grid_points) / grid_max);
  }
  return rep;
}

}  // namespace levykm
