#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace qestim {

/// SplitMix64 step; used for seed scrambling and child-stream derivation.
std::uint64_t splitmix64(std::uint64_t x);

/// Deterministic random stream. All distributions are implemented in this
/// project (not std::*_distribution) so sequences are identical across
/// standard libraries; tests freeze exact draws.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  /// Stream for worker `index` under `master`; independent streams for
  /// distinct indices, reproducible regardless of scheduling order.
  static RngStream child(std::uint64_t master, std::uint64_t index);

  std::uint64_t next_u64();

  /// Uniform on [0, 1) with 53-bit resolution.
  double uniform();

  /// Uniform on [lo, hi).
  double uniform(double lo, double hi);

  /// Uniform integer on [0, bound), rejection-free of modulo bias.
  std::uint64_t uniform_int(std::uint64_t bound);

  /// Binomial(trials, p). Bernoulli sum for small trials, mode-centered
  /// inverse transform (single uniform) for large trials.
  std::uint64_t binomial(std::uint64_t trials, double p);

  /// Identifies the generator and sampling algorithms; bump on change.
  static std::string algorithm_id();

 private:
  std::mt19937_64 engine_;
};

}  // namespace qestim
