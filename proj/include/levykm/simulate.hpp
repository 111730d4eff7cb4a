#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "levykm/model.hpp"
#include "levykm/parallel.hpp"
#include "levykm/rng.hpp"
#include "levykm/stable.hpp"

namespace levykm {

// One Euler-Maruyama step:
//   x = z + b(z) h + Lambda(z) (sqrt(h) xi) + sigma(z) o dL
// with xi standard Gaussian and dL_i an alpha-stable increment over h.
// Channels with sigma_i == 0 draw no Levy increment.
inline void euler_step_with_noise(const ModelSpec& model, std::span<const double> z, double h,
                                  std::span<const double> gauss, std::span<const double> levy_inc,
                                  std::span<double> out) {
  const int n = model.n;
  const double sqrt_h = std::sqrt(h);
  for (int i = 0; i < n; ++i) {
    double v = z[i] + model.drift[i].evaluate(z) * h;
    for (int j = 0; j < n; ++j) {
      const Expr& lam = model.diffusion_factor[i][j];
      if (lam.is_literal_zero()) continue;
      v += lam.evaluate(z) * sqrt_h * gauss[j];
    }
    if (model.levy_enabled(i)) v += model.sigma[i].evaluate(z) * levy_inc[i];
    out[i] = v;
  }
}

inline void euler_step(const ModelSpec& model, std::span<const double> z, double h,
                       RngStream& rng, std::span<double> out,
                       std::span<double> gauss_scratch, std::span<double> levy_scratch) {
  const int n = model.n;
  for (int i = 0; i < n; ++i) gauss_scratch[i] = rng.normal();
  for (int i = 0; i < n; ++i)
    levy_scratch[i] = model.levy_enabled(i) ? sample_levy_increment(model.levy[i], h, rng) : 0.0;
  euler_step_with_noise(model, z, h, gauss_scratch, levy_scratch, out);
}

inline std::vector<double> euler_step(const ModelSpec& model, std::span<const double> z, double h,
                                      RngStream& rng) {
  std::vector<double> out(model.n), g(model.n), l(model.n);
  euler_step(model, z, h, rng, out, g, l);
  return out;
}

// M independent pairs: Z uniform on the domain box, X the image after one
// step. Row j consumes only stream j of the seed, so the dataset is
// bit-identical for any worker count.
inline PairDataset generate_pairs(const ModelSpec& model, std::int64_t M, double h,
                                  std::uint64_t seed, int threads = 1) {
  if (M < 1) throw std::invalid_argument("generate_pairs: M must be >= 1");
  if (!(h > 0.0)) throw std::invalid_argument("generate_pairs: h must be positive");
  model.validate();
  const int n = model.n;
  PairDataset ds;
  ds.n = n;
  ds.rows = M;
  ds.h = h;
  ds.seed = seed;
  ds.model_fingerprint = model.fingerprint();
  ds.z.resize(static_cast<std::size_t>(M) * n);
  ds.x.resize(static_cast<std::size_t>(M) * n);

  parallel_for(M, threads, [&](std::int64_t begin, std::int64_t end, int) {
    std::vector<double> g(n), l(n);
    for (std::int64_t j = begin; j < end; ++j) {
      RngStream rng(seed, static_cast<std::uint64_t>(j));
      double* zj = ds.z.data() + j * n;
      double* xj = ds.x.data() + j * n;
      for (int i = 0; i < n; ++i) zj[i] = rng.uniform(model.domain[i][0], model.domain[i][1]);
      euler_step(model, {zj, static_cast<std::size_t>(n)}, h, rng,
                 {xj, static_cast<std::size_t>(n)}, g, l);
    }
  });
  return ds;
}

// Trajectory protocol: M0 uniform starts, each advanced floor(T/h) steps, every
// consecutive (state, image) pair recorded. A state that leaves the domain box
// is replaced by a fresh uniform point before the next step; the crossing pair
// keeps its true image. Trajectory t consumes only stream t of the seed.
inline PairDataset generate_trajectories(const ModelSpec& model, std::int64_t M0, double T,
                                         double h, std::uint64_t seed, int threads = 1) {
  if (M0 < 1) throw std::invalid_argument("generate_trajectories: M0 must be >= 1");
  if (!(h > 0.0) || T < h) throw std::invalid_argument("generate_trajectories: need T >= h > 0");
  model.validate();
  const int n = model.n;
  const std::int64_t steps = static_cast<std::int64_t>(std::floor(T / h + 1e-9));
  const std::int64_t M = M0 * steps;

  PairDataset ds;
  ds.n = n;
  ds.rows = M;
  ds.h = h;
  ds.seed = seed;
  ds.model_fingerprint = model.fingerprint();
  ds.z.resize(static_cast<std::size_t>(M) * n);
  ds.x.resize(static_cast<std::size_t>(M) * n);

  auto inside = [&](const double* p) {
    for (int i = 0; i < n; ++i)
      if (p[i] < model.domain[i][0] || p[i] > model.domain[i][1]) return false;
    return true;
  };

  parallel_for(M0, threads, [&](std::int64_t begin, std::int64_t end, int) {
    std::vector<double> state(n), g(n), l(n);
    for (std::int64_t t = begin; t < end; ++t) {
      RngStream rng(seed, static_cast<std::uint64_t>(t));
      for (int i = 0; i < n; ++i) state[i] = rng.uniform(model.domain[i][0], model.domain[i][1]);
      for (std::int64_t s = 0; s < steps; ++s) {
        const std::int64_t row = t * steps + s;
        double* zr = ds.z.data() + row * n;
        double* xr = ds.x.data() + row * n;
        for (int i = 0; i < n; ++i) zr[i] = state[i];
        euler_step(model, {zr, static_cast<std::size_t>(n)}, h, rng,
                   {xr, static_cast<std::size_t>(n)}, g, l);
        if (inside(xr)) {
          for (int i = 0; i < n; ++i) state[i] = xr[i];
        } else {
          for (int i = 0; i < n; ++i)
            state[i] = rng.uniform(model.domain[i][0], model.domain[i][1]);
        }
      }
    }
  });
  return ds;
}

}  // namespace levykm
