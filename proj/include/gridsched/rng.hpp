#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace gridsched {

inline constexpr const char* kGeneratorId = "mt19937_64/splitmix64-subseed/box-muller-cos";

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seedable generator with fully specified transforms, so traces are reproducible
// bit-for-bit by any implementation that uses the same engine and rules:
//   uniform      = (next() >> 11) * 2^-53                in [0, 1)
//   normal       = sqrt(-2 ln(1-u1)) * cos(2 pi u2)      one normal per two uniforms
//   exponential  = -mean * ln(1-u)
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Independent stream for sub-unit `index` (class, trial, ...).
  static Rng derive(std::uint64_t seed, std::uint64_t index) {
    return Rng(splitmix64(seed + index + 1));
  }

  std::uint64_t next() { return engine_(); }

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log1p(-u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double normal(double mu, double sigma) { return mu + sigma * normal(); }

  double exponential(double mean) { return -mean * std::log1p(-uniform()); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace gridsched
