#pragma once

#include <cmath>
#include <span>
#include <stdexcept>

#include "levykm/rng.hpp"

namespace levykm {

inline constexpr double kPi = 3.14159265358979323846264338328;

// Stability index and skewness of one scalar alpha-stable channel.
struct StableParams {
  double alpha = 1.5;
  double beta = 0.0;

  // Sampling admits the full range (0, 2]; alpha = 2 degenerates to a
  // Gaussian. The asymmetric Cauchy case needs a drift correction this
  // parameterization does not carry, so alpha = 1 requires beta = 0.
  void validate_sampler() const {
    if (!(alpha > 0.0) || !(alpha <= 2.0))
      throw std::invalid_argument("stable: alpha must be in (0, 2]");
    if (!(beta >= -1.0) || !(beta <= 1.0))
      throw std::invalid_argument("stable: beta must be in [-1, 1]");
    if (alpha == 1.0 && beta != 0.0)
      throw std::invalid_argument("stable: alpha = 1 requires beta = 0");
  }

  // Estimators additionally need alpha bounded away from {0, 1, 2}.
  void validate_estimation() const {
    validate_sampler();
    const double margin = 0.05;
    if (alpha < margin || std::fabs(alpha - 1.0) < margin || alpha > 2.0 - margin)
      throw std::invalid_argument("stable: estimation requires alpha at distance > 0.05 from {0, 1, 2}");
  }
};

// k_alpha, the normalization of the jump kernel. Continuous across alpha = 1.
inline double stable_kernel_constant(double alpha) {
  if (!(alpha > 0.0) || !(alpha < 2.0))
    throw std::invalid_argument("stable_kernel_constant: alpha must be in (0, 2)");
  if (alpha == 1.0) return 2.0 / kPi;
  return alpha * (1.0 - alpha) / (std::tgamma(2.0 - alpha) * std::cos(kPi * alpha / 2.0));
}

// Jump measure density W(xi) = k_a (1 +/- beta) / (2 |xi|^{1+alpha}).
inline double kernel_density(const StableParams& p, double xi) {
  if (xi == 0.0) throw std::invalid_argument("kernel_density: xi must be nonzero");
  const double k = stable_kernel_constant(p.alpha);
  const double side = xi > 0.0 ? 1.0 + p.beta : 1.0 - p.beta;
  return k * side / (2.0 * std::pow(std::fabs(xi), 1.0 + p.alpha));
}

// One draw from the standard stable law whose Levy density is exactly
// kernel_density(p, .), via the Chambers-Mallows-Stuck transform of one
// uniform and one exponential variate.
inline double sample_standard_stable(const StableParams& p, RngStream& rng) {
  p.validate_sampler();
  const double u = rng.uniform01();
  const double U = kPi * (u - 0.5);
  const double E = rng.exponential();
  if (p.alpha == 2.0) return 2.0 * std::sin(U) * std::sqrt(E);
  if (p.alpha == 1.0) return std::tan(U);  // beta == 0 here
  const double t = p.beta * std::tan(kPi * p.alpha / 2.0);
  const double theta0 = std::atan(t) / p.alpha;
  const double scale = std::pow(1.0 + t * t, 0.5 / p.alpha);
  const double phase = p.alpha * (U + theta0);
  return scale * std::sin(phase) / std::pow(std::cos(U), 1.0 / p.alpha) *
         std::pow(std::cos(U - phase) / E, (1.0 - p.alpha) / p.alpha);
}

// Increment of the Levy motion over time h: h^{1/alpha} times a standard draw.
inline double sample_levy_increment(const StableParams& p, double h, RngStream& rng) {
  if (!(h > 0.0)) throw std::invalid_argument("sample_levy_increment: h must be positive");
  return std::pow(h, 1.0 / p.alpha) * sample_standard_stable(p, rng);
}

// Surface area of the unit sphere in R^n (S_0 = 2, S_1 = 2 pi, ...).
inline double unit_sphere_area(int n) {
  if (n < 1) throw std::invalid_argument("unit_sphere_area: n must be >= 1");
  return 2.0 * std::pow(kPi, 0.5 * n) / std::tgamma(0.5 * n);
}

// c(n, alpha): radial kernel constant of the rotationally symmetric law with
// characteristic function exp(-|xi|^alpha).
inline double isotropic_kernel_constant(int n, double alpha) {
  if (n < 1) throw std::invalid_argument("isotropic_kernel_constant: n must be >= 1");
  if (!(alpha > 0.0) || !(alpha < 2.0))
    throw std::invalid_argument("isotropic_kernel_constant: alpha must be in (0, 2)");
  return alpha * std::tgamma(0.5 * (n + alpha)) /
         (std::pow(2.0, 1.0 - alpha) * std::pow(kPi, 0.5 * n) * std::tgamma(1.0 - 0.5 * alpha));
}

// Rotationally invariant stable vector with characteristic function
// exp(-|xi|^alpha): subordinated Gaussian sqrt(2 A) G with A positive
// alpha/2-stable scaled by cos(pi alpha / 4)^{2/alpha}.
inline void sample_isotropic_stable_vector(int n, double alpha, RngStream& rng,
                                           std::span<double> out) {
  if (n < 1 || static_cast<std::size_t>(n) > out.size())
    throw std::invalid_argument("sample_isotropic_stable_vector: bad dimension");
  if (!(alpha > 0.0) || !(alpha < 2.0))
    throw std::invalid_argument("sample_isotropic_stable_vector: alpha must be in (0, 2)");
  const StableParams positive{alpha / 2.0, 1.0};
  const double scale = std::pow(std::cos(kPi * alpha / 4.0), 2.0 / alpha);
  const double subordinator = std::max(scale * sample_standard_stable(positive, rng), 0.0);
  const double factor = std::sqrt(2.0 * subordinator);
  for (int i = 0; i < n; ++i) out[i] = factor * rng.normal();
}

}  // namespace levykm
