#pragma once

#include <cmath>
#include <cstdint>

namespace levykm {

// Counter-based keyed generator. Stream k of a master seed is an independent
// sequence derived purely from (seed, k), so sample j of stream k is the same
// no matter how work is scheduled across threads.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream) {
    key1_ = mix(seed + kGolden * (stream + 1));
    key2_ = mix(key1_ ^ 0xBF58476D1CE4E5B9ULL);
  }

  std::uint64_t next_u64() { return mix(mix(counter_++ * kGolden + key1_) ^ key2_); }

  // Uniform on the open interval (0, 1); never returns 0 or 1, so logs and
  // tangents of the result stay finite.
  double uniform01() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  double exponential() { return -std::log(uniform01()); }

  // Standard normal via Box-Muller; consumes two uniforms per pair of draws.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform01()));
    const double t = 6.283185307179586476925286766559 * uniform01();
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t key1_ = 0;
  std::uint64_t key2_ = 0;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace levykm
