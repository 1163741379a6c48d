#include "qestim/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace qestim {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

RngStream::RngStream(std::uint64_t seed) : engine_(splitmix64(seed)) {}

RngStream RngStream::child(std::uint64_t master, std::uint64_t index) {
  return RngStream(splitmix64(splitmix64(master) + index));
}

std::uint64_t RngStream::next_u64() { return engine_(); }

double RngStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

std::uint64_t RngStream::uniform_int(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("uniform_int: bound must be positive");
  // Reject the short tail so every residue is equally likely.
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = next_u64();
    if (r >= threshold) return r % bound;
  }
}

namespace {

constexpr std::uint64_t kBernoulliCutoff = 10000;

double log_binom_pmf(std::uint64_t n, std::uint64_t k, double p) {
  const double nn = static_cast<double>(n);
  const double kk = static_cast<double>(k);
  return std::lgamma(nn + 1.0) - std::lgamma(kk + 1.0) - std::lgamma(nn - kk + 1.0) +
         kk * std::log(p) + (nn - kk) * std::log1p(-p);
}

}  // namespace

std::uint64_t RngStream::binomial(std::uint64_t trials, double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument("binomial: p must lie in [0, 1]");
  }
  if (trials == 0 || p == 0.0) return 0;
  if (p == 1.0) return trials;
  if (trials <= kBernoulliCutoff) {
    std::uint64_t count = 0;
    for (std::uint64_t i = 0; i < trials; ++i) {
      if (uniform() < p) ++count;
    }
    return count;
  }
  // Inverse transform fanning outward from the mode: the bulk of the mass is
  // reached in O(sqrt(n p q)) pmf evaluations and one uniform is consumed.
  const double n = static_cast<double>(trials);
  const double q = 1.0 - p;
  std::uint64_t mode = static_cast<std::uint64_t>((n + 1.0) * p);
  if (mode > trials) mode = trials;
  const double pmf_mode = std::exp(log_binom_pmf(trials, mode, p));

  double u = uniform();
  u -= pmf_mode;
  if (u <= 0.0) return mode;

  // lo walks mode-1, mode-2, ...; hi walks mode+1, mode+2, ...
  double pmf_lo = pmf_mode;
  double pmf_hi = pmf_mode;
  std::uint64_t lo = mode;
  std::uint64_t hi = mode;
  const double ratio = p / q;
  for (;;) {
    bool advanced = false;
    if (hi < trials) {
      pmf_hi *= (n - static_cast<double>(hi)) / (static_cast<double>(hi) + 1.0) * ratio;
      ++hi;
      u -= pmf_hi;
      if (u <= 0.0) return hi;
      advanced = true;
    }
    if (lo > 0) {
      pmf_lo *= static_cast<double>(lo) / (n - static_cast<double>(lo) + 1.0) / ratio;
      --lo;
      u -= pmf_lo;
      if (u <= 0.0) return lo;
      advanced = true;
    }
    // Total mass is 1; reaching both ends means u survived only through
    // floating-point undershoot. The mode is the max-likelihood fallback.
    if (!advanced) return mode;
  }
}

std::string RngStream::algorithm_id() {
  return "splitmix64+mt19937_64;u53;binomial=bernoulli<=1e4|mode-itr;v1";
}

}  // namespace qestim
