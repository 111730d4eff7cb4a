#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "levykm/corrections.hpp"

using namespace levykm;

TEST_CASE("drift correction closed form") {
  CHECK(drift_correction({0.5, 0.0, 1.0, 0.5}) == 0.0);
  CHECK(drift_correction({1.3, 0.0, 2.0, 1.5}) == 0.0);
  CHECK(drift_correction({0.5, 0.5, 1.0, 0.5}) == Catch::Approx(0.282094791774).epsilon(1e-10));
  CHECK(drift_correction({1.5, -0.5, 1.0, 1.0}) == Catch::Approx(0.598413420602).epsilon(1e-10));
}

TEST_CASE("diffusion correction closed form") {
  CHECK(diffusion_correction({0.5, 0.0, 1.0, 1.0}) == Catch::Approx(0.265961520268).epsilon(1e-10));
  CHECK(diffusion_correction({1.5, 0.0, 1.0, 1.0}) == Catch::Approx(1.196826841204).epsilon(1e-10));
  // sigma -> 2 sigma multiplies S by 2^alpha
  CHECK(diffusion_correction({0.5, 0.0, 2.0, 1.0}) ==
        Catch::Approx(std::sqrt(2.0) * diffusion_correction({0.5, 0.0, 1.0, 1.0})).epsilon(1e-13));
}

TEST_CASE("R is linear in beta and scales as sigma^alpha") {
  for (double alpha : {0.4, 0.8, 1.3, 1.7}) {
    for (double eps : {0.5, 1.0, 2.0}) {
      const double r_full = drift_correction({alpha, 1.0, 1.3, eps});
      for (double beta : {-1.0, -0.4, 0.0, 0.3, 0.9})
        CHECK(drift_correction({alpha, beta, 1.3, eps}) ==
              Catch::Approx(beta * r_full).margin(1e-14));
      const double ratio = drift_correction({alpha, 0.7, 2.6, eps}) /
                           drift_correction({alpha, 0.7, 1.3, eps});
      CHECK(ratio == Catch::Approx(std::pow(2.0, alpha)).epsilon(1e-12));
    }
  }
}

TEST_CASE("S is independent of beta and strictly positive") {
  for (double alpha : {0.3, 0.9, 1.5, 1.9}) {
    for (double eps : {0.5, 1.0, 2.0}) {
      const double s = diffusion_correction({alpha, 0.0, 1.0, eps});
      CHECK(s > 0.0);
      // quadrature of the defining integral at extreme skewness agrees to 1e-10
      const double s_left = correction_quadrature_oracle({alpha, -1.0, 1.0, eps}, 2);
      const double s_mid = correction_quadrature_oracle({alpha, 0.0, 1.0, eps}, 2);
      const double s_right = correction_quadrature_oracle({alpha, 1.0, 1.0, eps}, 2);
      CHECK(s_left == Catch::Approx(s_mid).margin(1e-10));
      CHECK(s_right == Catch::Approx(s_mid).margin(1e-10));
    }
  }
}

TEST_CASE("closed forms match the quadrature oracle on a parameter grid") {
  const double alphas[] = {0.3, 0.5, 0.9, 1.3, 1.7};
  const double betas[] = {-1.0, -0.5, 0.0, 0.5, 1.0};
  const double epsilons[] = {0.5, 1.0, 2.0};
  for (double alpha : alphas)
    for (double beta : betas)
      for (double eps : epsilons) {
        const CorrectionInput in{alpha, beta, 1.4, eps};
        CHECK(correction_quadrature_oracle(in, 1) ==
              Catch::Approx(drift_correction(in)).margin(1e-8));
        CHECK(correction_quadrature_oracle(in, 2) ==
              Catch::Approx(diffusion_correction(in)).margin(1e-8));
      }
}

TEST_CASE("alpha = 1 drift branch matches its restricted integral") {
  for (double eps : {0.5, 2.0, 5.0}) {
    for (double beta : {-1.0, 0.5, 1.0}) {
      for (double sigma : {0.7, 1.0, 2.0}) {
        const CorrectionInput in{1.0, beta, sigma, eps};
        CHECK(drift_correction(in) ==
              Catch::Approx((2.0 / kPi) * sigma * beta * std::log(eps)).margin(1e-14));
        CHECK(correction_quadrature_oracle(in, 1) ==
              Catch::Approx(drift_correction(in)).margin(1e-8));
      }
    }
  }
}

TEST_CASE("zero intensity produces zero corrections") {
  CHECK(drift_correction({1.5, 0.7, 0.0, 1.0}) == 0.0);
  CHECK(diffusion_correction({1.5, 0.7, 0.0, 1.0}) == 0.0);
  CHECK(correction_quadrature_oracle({1.5, 0.7, 0.0, 1.0}, 2) == 0.0);
}

TEST_CASE("domain validation") {
  CHECK_THROWS_AS(drift_correction({2.5, 0.0, 1.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(drift_correction({1.5, 2.0, 1.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(drift_correction({1.5, 0.0, -1.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(drift_correction({1.5, 0.0, 1.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(correction_quadrature_oracle({1.5, 0.0, 1.0, 1.0}, 3), std::invalid_argument);
}
