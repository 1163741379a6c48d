#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "qestim/rng.hpp"

using namespace qestim;

TEST_CASE("identical seeds give identical streams") {
  RngStream a(42), b(42);
  for (int i = 0; i < 64; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("frozen draws pin the generator across toolchains") {
  RngStream r(12345);
  CHECK(r.next_u64() == 13634125877265751704ull);
  CHECK(r.next_u64() == 16211178760285826153ull);
  CHECK(r.next_u64() == 10074377354719578593ull);
  CHECK(r.next_u64() == 6744980677534055516ull);

  RngStream u(12345);
  CHECK(u.uniform() == doctest::Approx(0.73910744480361801).epsilon(1e-16));
  CHECK(u.uniform() == doctest::Approx(0.8788097615226379).epsilon(1e-16));

  RngStream c = RngStream::child(7, 3);
  CHECK(c.next_u64() == 9163474386658121462ull);

  RngStream b(99);
  CHECK(b.binomial(1000, 0.3) == 275);
  RngStream b2(99);
  CHECK(b2.binomial(1000000, 0.3) == 301030);
}

TEST_CASE("child streams are distinct and order-independent") {
  RngStream c0 = RngStream::child(1000, 0);
  RngStream c1 = RngStream::child(1000, 1);
  CHECK(c0.next_u64() != c1.next_u64());

  // Rebuilding the same child later gives the same stream.
  RngStream again = RngStream::child(1000, 1);
  RngStream ref = RngStream::child(1000, 1);
  for (int i = 0; i < 8; ++i) CHECK(again.next_u64() == ref.next_u64());
}

TEST_CASE("algorithm id names the sampling scheme") {
  CHECK(RngStream::algorithm_id() ==
        "splitmix64+mt19937_64;u53;binomial=bernoulli<=1e4|mode-itr;v1");
}

TEST_CASE("uniform has 53-bit resolution on [0,1)") {
  RngStream r(7);
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const double scaled = u * 9007199254740992.0;  // 2^53
    CHECK(scaled == std::floor(scaled));
  }
}

TEST_CASE("bounded uniform stays in range") {
  RngStream r(8);
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform(-2.5, 3.5);
    CHECK(u >= -2.5);
    CHECK(u < 3.5);
  }
}

TEST_CASE("uniform_int covers the range without bias artifacts") {
  RngStream r(9);
  std::vector<int> counts(7, 0);
  const int draws = 70000;
  for (int i = 0; i < draws; ++i) {
    const std::uint64_t v = r.uniform_int(7);
    REQUIRE(v < 7);
    ++counts[static_cast<std::size_t>(v)];
  }
  // Each bucket expects 10000 with sd ~ 92; allow 6 sd.
  for (int c : counts) CHECK(std::abs(c - 10000) < 6 * 92);
}

TEST_CASE("binomial edge probabilities") {
  RngStream r(10);
  CHECK(r.binomial(1000, 0.0) == 0);
  CHECK(r.binomial(1000, 1.0) == 1000);
  CHECK(r.binomial(0, 0.5) == 0);
  CHECK(r.binomial(5000000, 0.0) == 0);
  CHECK(r.binomial(5000000, 1.0) == 5000000);
}

TEST_CASE("binomial matches mean and variance in the Bernoulli-sum regime") {
  RngStream r(11);
  const std::uint64_t trials = 1000;
  const double p = 0.3;
  const int replicas = 2000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < replicas; ++i) {
    const double x = static_cast<double>(r.binomial(trials, p));
    sum += x;
    sum_sq += x * x;
  }
  const double mean = sum / replicas;
  const double var = sum_sq / replicas - mean * mean;
  const double exact_mean = trials * p;
  const double exact_var = trials * p * (1.0 - p);
  // 4 sd of the replica mean.
  CHECK(std::abs(mean - exact_mean) < 4.0 * std::sqrt(exact_var / replicas));
  CHECK(var == doctest::Approx(exact_var).epsilon(0.2));
}

TEST_CASE("binomial matches mean and variance in the inverse-transform regime") {
  RngStream r(12);
  const std::uint64_t trials = 200000;  // beyond the Bernoulli-sum cutoff
  const double p = 0.41;
  const int replicas = 1500;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < replicas; ++i) {
    const double x = static_cast<double>(r.binomial(trials, p));
    sum += x;
    sum_sq += x * x;
  }
  const double mean = sum / replicas;
  const double var = sum_sq / replicas - mean * mean;
  const double exact_mean = trials * p;
  const double exact_var = trials * p * (1.0 - p);
  CHECK(std::abs(mean - exact_mean) < 4.0 * std::sqrt(exact_var / replicas));
  CHECK(var == doctest::Approx(exact_var).epsilon(0.2));
}

TEST_CASE("splitmix64 scrambles zero") {
  CHECK(splitmix64(0) != 0);
  CHECK(splitmix64(1) != splitmix64(2));
}
