#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "levykm/expr.hpp"
#include "levykm/stable.hpp"

namespace levykm {

// Full generative description of one SDE: drift vector b, diffusion factor
// matrix Lambda, per-dimension noise intensity sigma_i(x_i), stable-law
// parameters, and the simulation domain box.
struct ModelSpec {
  int n = 0;
  std::vector<Expr> drift;                          // n entries
  std::vector<std::vector<Expr>> diffusion_factor;  // n x n
  std::vector<Expr> sigma;                          // n entries, sigma_i(x_i)
  std::vector<StableParams> levy;                   // n entries
  std::vector<std::array<double, 2>> domain;        // n intervals [lo, hi]

  // A channel whose sigma is literally 0 has its Levy noise switched off;
  // its stable parameters are then ignored.
  bool levy_enabled(int i) const { return !sigma[i].is_literal_zero(); }

  void validate() const {
    if (n < 1) throw std::invalid_argument("model: dimension must be >= 1");
    if (drift.size() != static_cast<std::size_t>(n) ||
        diffusion_factor.size() != static_cast<std::size_t>(n) ||
        sigma.size() != static_cast<std::size_t>(n) ||
        levy.size() != static_cast<std::size_t>(n) ||
        domain.size() != static_cast<std::size_t>(n))
      throw std::invalid_argument("model: field lengths must all equal n");
    for (int i = 0; i < n; ++i) {
      if (!(domain[i][0] < domain[i][1]))
        throw std::invalid_argument("model: empty domain interval for dimension " +
                                    std::to_string(i + 1));
      if (diffusion_factor[i].size() != static_cast<std::size_t>(n))
        throw std::invalid_argument("model: diffusion_factor row " + std::to_string(i + 1) +
                                    " must have n entries");
    }
    auto check_vars = [&](const Expr& e, const std::string& what) {
      if (e.max_variable() > n)
        throw std::invalid_argument("model: " + what + " references x" +
                                    std::to_string(e.max_variable()) + " beyond dimension " +
                                    std::to_string(n));
    };
    for (int i = 0; i < n; ++i) {
      check_vars(drift[i], "drift " + std::to_string(i + 1));
      for (int j = 0; j < n; ++j)
        check_vars(diffusion_factor[i][j], "diffusion_factor " + std::to_string(i + 1) + "," +
                                               std::to_string(j + 1));
      check_vars(sigma[i], "sigma " + std::to_string(i + 1));
      for (int v : sigma[i].free_variables())
        if (v != i + 1)
          throw std::invalid_argument("model: sigma " + std::to_string(i + 1) +
                                      " may depend only on x" + std::to_string(i + 1) +
                                      " but references x" + std::to_string(v));
      if (levy_enabled(i)) {
        levy[i].validate_sampler();
        // Spot check positivity of sigma_i on a grid along its own axis.
        std::vector<double> point(n, 0.0);
        for (int g = 0; g <= 100; ++g) {
          point[i] = domain[i][0] + (domain[i][1] - domain[i][0]) * g / 100.0;
          if (!(sigma[i].evaluate(point) > 0.0))
            throw std::invalid_argument("model: sigma " + std::to_string(i + 1) +
                                        " must be positive on the domain");
        }
      }
    }
  }

  // Stable identifier of the model content, carried in dataset metadata.
  std::string fingerprint() const {
    std::string text = "n=" + std::to_string(n) + ";";
    for (const Expr& e : drift) text += "b:" + e.str() + ";";
    for (const auto& row : diffusion_factor)
      for (const Expr& e : row) text += "L:" + e.str() + ";";
    for (const Expr& e : sigma) text += "s:" + e.str() + ";";
    for (const StableParams& p : levy) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "a:%.17g,b:%.17g;", p.alpha, p.beta);
      text += buf;
    }
    for (const auto& d : domain) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "d:%.17g,%.17g;", d[0], d[1]);
      text += buf;
    }
    std::uint64_t hash = 0xCBF29CE484222325ULL;
    for (unsigned char c : text) {
      hash ^= c;
      hash *= 0x100000001B3ULL;
    }
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(hash));
    return std::string(hex);
  }
};

// M paired observations: Z holds initial points, X their images after one
// step of length h. Row-major M x n storage.
struct PairDataset {
  int n = 0;
  std::int64_t rows = 0;
  double h = 0.0;
  std::uint64_t seed = 0;
  std::string model_fingerprint;
  std::vector<double> z;
  std::vector<double> x;

  std::span<const double> z_row(std::int64_t r) const { return {z.data() + r * n, static_cast<std::size_t>(n)}; }
  std::span<const double> x_row(std::int64_t r) const { return {x.data() + r * n, static_cast<std::size_t>(n)}; }
  double z_at(std::int64_t r, int i) const { return z[r * n + i]; }
  double x_at(std::int64_t r, int i) const { return x[r * n + i]; }
};

}  // namespace levykm
