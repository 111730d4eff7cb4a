#pragma once

#include <cmath>
#include <stdexcept>

#include "levykm/quadrature.hpp"
#include "levykm/stable.hpp"

namespace levykm {

// Arguments of the nonlocal correction terms: stable parameters, the noise
// intensity evaluated at the point of interest, and the truncation radius.
struct CorrectionInput {
  double alpha = 1.5;
  double beta = 0.0;
  double sigma_value = 1.0;
  double epsilon = 1.0;

  void validate() const {
    if (!(alpha > 0.0) || !(alpha < 2.0))
      throw std::invalid_argument("correction: alpha must be in (0, 2)");
    if (!(beta >= -1.0) || !(beta <= 1.0))
      throw std::invalid_argument("correction: beta must be in [-1, 1]");
    if (sigma_value < 0.0) throw std::invalid_argument("correction: sigma must be >= 0");
    if (!(epsilon > 0.0)) throw std::invalid_argument("correction: epsilon must be positive");
  }
};

// R, the small-jump contribution to the truncated first moment:
//   sigma^a k_a beta eps^{1-a} / (1-a)   for a != 1,
//   (2/pi) sigma beta ln(eps)            for a == 1.
inline double drift_correction(const CorrectionInput& c) {
  c.validate();
  if (c.alpha == 1.0) return (2.0 / kPi) * c.sigma_value * c.beta * std::log(c.epsilon);
  return std::pow(c.sigma_value, c.alpha) * stable_kernel_constant(c.alpha) * c.beta *
         std::pow(c.epsilon, 1.0 - c.alpha) / (1.0 - c.alpha);
}

// S_ii, the small-jump contribution to the truncated second moment:
//   sigma^a k_a eps^{2-a} / (2-a).
// The skewness cancels between the two half-lines, so S carries no beta
// factor; off-diagonal terms are identically zero.
inline double diffusion_correction(const CorrectionInput& c) {
  c.validate();
  return std::pow(c.sigma_value, c.alpha) * stable_kernel_constant(c.alpha) *
         std::pow(c.epsilon, 2.0 - c.alpha) / (2.0 - c.alpha);
}

// Direct numeric evaluation of the defining integrals of R (moment = 1) and
// S_ii (moment = 2) from the jump kernel itself; the independent check the
// closed forms are tested against.
inline double correction_quadrature_oracle(const CorrectionInput& c, int moment,
                                           double abs_tol = 1e-11) {
  c.validate();
  if (moment != 1 && moment != 2) throw std::invalid_argument("oracle: moment must be 1 or 2");
  if (c.sigma_value == 0.0) return 0.0;
  // y^m W(y/sigma)/sigma arranged as a single power of |y| so the quadrature
  // can probe arbitrarily close to the singularity without underflow:
  //   m=1: sign(y) k (1 +/- b)/2 sigma^a |y|^{-a}
  //   m=2:         k (1 +/- b)/2 sigma^a |y|^{1-a}
  const double k_scale =
      stable_kernel_constant(c.alpha) * std::pow(c.sigma_value, c.alpha) / 2.0;
  auto integrand = [&](double y) {
    const double side = y > 0.0 ? 1.0 + c.beta : 1.0 - c.beta;
    const double mag = std::fabs(y);
    if (moment == 1)
      return (y > 0.0 ? 1.0 : -1.0) * k_scale * side * std::pow(mag, -c.alpha);
    return k_scale * side * std::pow(mag, 1.0 - c.alpha);
  };

  if (moment == 2 || c.alpha < 1.0) {
    // Integrable endpoint singularity at zero; split the interval there.
    return tanh_sinh(integrand, -c.epsilon, 0.0, abs_tol) +
           tanh_sinh(integrand, 0.0, c.epsilon, abs_tol);
  }
  if (c.alpha == 1.0) {
    // Integral over [-eps, -1] and [1, eps]; signed when eps < 1.
    return tanh_sinh(integrand, 1.0, c.epsilon, abs_tol) +
           tanh_sinh(integrand, -c.epsilon, -1.0, abs_tol);
  }
  // alpha > 1: minus the two infinite tails beyond +/- eps.
  const double upper = tanh_sinh_tail(integrand, c.epsilon, abs_tol);
  const double lower = tanh_sinh_tail([&](double y) { return integrand(-y); }, c.epsilon, abs_tol);
  return -(upper + lower);
}

}  // namespace levykm
