#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace uwb {

/// Deterministic random stream derived from a master seed and a stream name.
///
/// Every sampler consumes a fixed number of engine draws (normal() always
/// burns two uniforms), so the draw sequence of one stream never depends on
/// how the values are used. Samplers avoid std::*_distribution on purpose:
/// their algorithms are implementation-defined, ours are pinned.
class RandomStream {
 public:
  RandomStream(std::uint64_t master_seed, std::string_view name)
      : engine_(mix(master_seed, fnv1a(name))) {}

  /// Uniform in [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + uniform() * (hi - lo); }

  /// Standard normal via Box-Muller (cosine branch). Two draws, always.
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Exponential with the given mean. One draw.
  double exponential(double mean) {
    double u = uniform();
    if (u > 1.0 - 1e-16) u = 1.0 - 1e-16;
    return -mean * std::log1p(-u);
  }

  /// One draw; true with probability p.
  bool bernoulli(double p) { return uniform() < p; }

  /// Uniform integer in [0, n). One draw.
  std::uint64_t index(std::uint64_t n) {
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
  }

 private:
  static std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (char c : s) {
      h ^= static_cast<unsigned char>(c);
      h *= 1099511628211ull;
    }
    return h;
  }

  // splitmix64 finalizer over seed and stream hash.
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull + stream * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::mt19937_64 engine_;
};

}  // namespace uwb
