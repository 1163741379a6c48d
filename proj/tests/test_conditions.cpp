#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "qestim/conditions.hpp"
#include "qestim/deuteron.hpp"
#include "qestim/pauli.hpp"
#include "qestim/rng.hpp"
#include "qestim/spectral.hpp"
#include "qestim/sqpe.hpp"

using namespace qestim;

namespace {

ObservableExpansion random_obs(RngStream& rng) {
  ObservableExpansion obs;
  obs.identity_coeff = rng.uniform(-2.0, 2.0);
  obs.terms.push_back({rng.uniform(0.2, 2.0), 0.0, PauliString("X")});
  obs.terms.push_back({rng.uniform(0.2, 2.0), 0.0, PauliString("Z")});
  return obs;
}

PureState random_pure(RngStream& rng) {
  Vector v(2);
  v << cplx(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)),
      cplx(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
  v.normalize();
  return PureState(v);
}

ConditionInput input_from(const ObservableExpansion& obs, const SpectralOracle& oracle,
                          const PureState& state, std::size_t order, double eps_r) {
  const MomentTable mom = oracle.moments(state, order);
  const Norms norms = obs.one_norms();
  ConditionInput input;
  input.order = order;
  input.eps_r = eps_r;
  input.mean_abs = std::abs(mom.mean);
  input.variance = mom.variance;
  input.even_moment = mom.even(order);
  input.traceless_one_norm = norms.traceless_one;
  input.full_one_norm = norms.full_one;
  return input;
}

}  // namespace

TEST_CASE("exact condition boundary is inclusive and monotone in the tolerance") {
  ConditionInput input;
  input.order = 1;
  input.eps_r = 0.02;
  input.traceless_one_norm = 1.0;
  input.full_one_norm = 1.2;
  const double odd3 = 0.37;
  // Place the ratio exactly on the boundary.
  input.mean_abs = shot_prefactor(1) / input.eps_r * odd3;
  CHECK(condition_exact(input, odd3));
  CHECK(condition_exact(input, -odd3));  // sign of the moment is irrelevant

  ConditionInput looser = input;
  looser.eps_r = 0.03;
  CHECK(condition_exact(looser, odd3));
  ConditionInput tighter = input;
  tighter.eps_r = 0.01;
  CHECK(!condition_exact(tighter, odd3));
}

TEST_CASE("condition inputs are validated") {
  ConditionInput input;
  input.order = 1;
  input.eps_r = 0.01;
  input.traceless_one_norm = 0.0;
  CHECK_THROWS_AS(input.ratio(), std::invalid_argument);
  input.traceless_one_norm = 1.0;
  input.order = 0;
  CHECK_THROWS_AS(condition_exact(input, 0.1), std::invalid_argument);
  input.order = 1;
  input.eps_r = 0.0;
  CHECK_THROWS_AS(condition_exact(input, 0.1), std::invalid_argument);
  input.eps_r = 0.01;
  input.variance = -1.0;
  CHECK_THROWS_AS(condition_loose(input), std::invalid_argument);
  CHECK_THROWS_AS(condition_eigen(0.1, 0.01, 0), std::invalid_argument);
  CHECK_THROWS_AS(condition_gamma(0.1, 0.01, 1, 0.1, 0.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(even_moment_fidelity_bound(1.0, -0.1, 2.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(even_moment_fidelity_bound(1.0, 0.1, 2.0, 0), std::invalid_argument);
}

TEST_CASE("eigenstate condition threshold at one percent") {
  // Second-order threshold eps_r^(1/4) / sqrt(f(2)).
  const double threshold = std::pow(0.01, 0.25) / std::sqrt(shot_prefactor(2));
  CHECK(threshold == doctest::Approx(0.765542056478645).epsilon(1e-12));
  CHECK(condition_eigen(threshold * (1.0 - 1e-9), 0.01, 2));
  CHECK(!condition_eigen(threshold * (1.0 + 1e-9), 0.01, 2));

  RngStream rng(30);
  for (std::size_t order = 1; order <= 8; ++order) {
    const double eps_r = rng.uniform(1e-4, 0.1);
    const double rhs = std::pow(eps_r, 1.0 / (2.0 * static_cast<double>(order))) /
                       std::sqrt(shot_prefactor(order));
    CHECK(condition_eigen(rhs * 0.999, eps_r, order));
    CHECK(!condition_eigen(rhs * 1.001, eps_r, order));
  }
}

TEST_CASE("gamma condition with the exact moment ratio matches the exact condition") {
  RngStream rng(31);
  for (int trial = 0; trial < 40; ++trial) {
    const ObservableExpansion obs = random_obs(rng);
    const SpectralOracle oracle(obs);
    const PureState state = random_pure(rng);
    const std::size_t order = 1 + rng.uniform_int(3);
    const double eps_r = rng.uniform(1e-3, 0.2);
    const ConditionInput input = input_from(obs, oracle, state, order, eps_r);
    const double odd = oracle.moments(state, order).odd[order];
    const double gamma_k =
        std::abs(odd) / std::pow(input.full_one_norm, 2.0 * static_cast<double>(order) + 1.0);
    CHECK(condition_gamma(input.ratio(), eps_r, order, gamma_k, obs.identity_coeff,
                          input.traceless_one_norm) == condition_exact(input, odd));
  }
}

TEST_CASE("loose conditions form a sufficiency chain") {
  RngStream rng(32);
  int cov_hits = 0, norm_hits = 0, chain_breaks = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const ObservableExpansion obs = random_obs(rng);
    const SpectralOracle oracle(obs);
    const PureState state = random_pure(rng);
    const std::size_t order = 1 + rng.uniform_int(3);
    const double eps_r = rng.uniform(1e-3, 0.5);
    const ConditionInput input = input_from(obs, oracle, state, order, eps_r);
    const double K = static_cast<double>(order);
    const double odd = oracle.moments(state, order).odd[order];
    const double rho = oracle.spectral_radius();

    // Rigorous moment chain: the covariance term obeys Cauchy-Schwarz and the
    // Lipschitz variance budget, which carries a 2K factor.
    const double rigorous =
        input.even_moment * input.mean_abs +
        2.0 * K * std::pow(rho, 2.0 * K - 1.0) * input.variance;
    CHECK(std::abs(odd) <= rigorous * (1.0 + 1e-9) + 1e-15);

    // The checkable conditions replace 2K rho^(2K-1) by ||O||_1^(2K-1), which
    // trades the 2K factor for the norm; the resulting numerator is cheaper
    // to certify but no longer dominates the odd moment on every instance.
    const double cov_numerator =
        input.even_moment * input.mean_abs +
        std::pow(input.full_one_norm, 2.0 * K - 1.0) * input.variance;
    const double norm_numerator =
        std::pow(input.full_one_norm, 2.0 * K + 1.0) *
        (1.0 + input.variance / (input.full_one_norm * input.full_one_norm));
    CHECK(cov_numerator <= norm_numerator * (1.0 + 1e-12));

    const LooseVerdict verdict = condition_loose(input);
    if (verdict.norm_bound) CHECK(verdict.covariance_bound);
    const bool chain_holds = std::abs(odd) <= cov_numerator * (1.0 + 1e-12);
    if (!chain_holds) ++chain_breaks;
    if (verdict.covariance_bound && chain_holds) CHECK(condition_exact(input, odd));
    cov_hits += verdict.covariance_bound ? 1 : 0;
    norm_hits += verdict.norm_bound ? 1 : 0;
  }
  // The ensemble must exercise both sides of each boundary, and the cheaper
  // numerator should still dominate on the large majority of instances.
  CHECK(cov_hits > 0);
  CHECK(cov_hits < 200);
  CHECK(norm_hits < cov_hits);
  CHECK(chain_breaks < 40);
}

TEST_CASE("zero-variance reference point separates the condition families") {
  const ObservableExpansion h = deuteron_hamiltonian();
  const SpectralOracle oracle(h);
  const double lambda = oracle.lambda_min();
  const Norms norms = h.one_norms();

  // Eigenstate condition already admits the advantage at first order.
  const double ratio = std::abs(lambda) / norms.traceless_one;
  CHECK(condition_eigen(ratio, 0.01, 1));

  const auto verdict_at = [&](std::size_t order) {
    ConditionInput input;
    input.order = order;
    input.eps_r = 0.01;
    input.mean_abs = std::abs(lambda);
    input.variance = 0.0;
    input.even_moment = std::pow(lambda, 2.0 * static_cast<double>(order));
    input.traceless_one_norm = norms.traceless_one;
    input.full_one_norm = norms.full_one;
    return condition_loose(input);
  };

  // With zero variance the covariance numerator collapses to |lambda|^(2K+1),
  // so that family recovers the eigenstate condition and admits at K = 1.
  CHECK(verdict_at(1).covariance_bound);

  // The norm-only numerator keeps the full one-norm amplification and needs
  // fifth order before it admits: strictly more pessimistic at zero variance.
  std::size_t min_k = 0;
  for (std::size_t order = 1; order <= 8; ++order) {
    if (verdict_at(order).norm_bound) {
      min_k = order;
      break;
    }
  }
  CHECK(min_k == 5);
}

TEST_CASE("fidelity bound dominates the even moment of a perturbed eigenstate") {
  const ObservableExpansion h = deuteron_hamiltonian();
  const SpectralOracle oracle(h);
  const Norms norms = h.one_norms();
  const double lambda0 = oracle.eigenvalues()[0];

  // Formula spot check.
  CHECK(even_moment_fidelity_bound(2.0, 0.25, 3.0, 2) ==
        doctest::Approx(16.0 + 0.25 * 81.0).epsilon(1e-14));
  CHECK(even_moment_fidelity_bound(lambda0, 0.0, norms.full_one, 3) ==
        doctest::Approx(std::pow(lambda0, 6.0)).epsilon(1e-12));

  const Vector ground = oracle.eigenstate(0).amplitudes;
  const Vector excited = oracle.eigenstate(1).amplitudes;
  for (double delta : {0.0, 0.01, 0.1, 0.4, 1.0}) {
    const Vector mixed = std::sqrt(1.0 - delta) * ground + std::sqrt(delta) * excited;
    const PureState state(mixed);
    for (std::size_t order = 1; order <= 3; ++order) {
      const double even = oracle.moments(state, order).even(order);
      CHECK(even <= even_moment_fidelity_bound(lambda0, delta, norms.full_one, order) *
                        (1.0 + 1e-12));
    }
  }
}

TEST_CASE("variance of an even power obeys the Lipschitz budget") {
  RngStream rng(33);
  for (int trial = 0; trial < 60; ++trial) {
    const ObservableExpansion obs = random_obs(rng);
    const SpectralOracle oracle(obs);
    const PureState state = random_pure(rng);
    const double rho = oracle.spectral_radius();
    const MomentTable mom = oracle.moments(state, 4);
    for (std::size_t order : {std::size_t{1}, std::size_t{2}}) {
      const double K = static_cast<double>(order);
      const double var_pow =
          mom.even(2 * order) - mom.even(order) * mom.even(order);
      const double budget = 4.0 * K * K * std::pow(rho, 4.0 * K - 2.0) * mom.variance;
      CHECK(var_pow <= budget * (1.0 + 1e-9) + 1e-12);
    }
  }
}

TEST_CASE("eigen-ratio region boundary follows the closed form") {
  RegionScanSettings settings;
  settings.grid = 32;
  settings.orders = {1, 2};
  settings.x_min = 1e-2;
  settings.x_max = 1.0;
  const auto rows = region_scan(RegionMode::EigenRatio, settings);
  REQUIRE(rows.size() == 2 * 32);
  for (const RegionRow& row : rows) {
    CHECK(row.mode == "eigen_ratio");
    const double f = shot_prefactor(row.order);
    CHECK(row.y_boundary ==
          doctest::Approx(std::pow(row.x * std::sqrt(f), 2.0 * static_cast<double>(row.order)))
              .epsilon(1e-12));
  }
  // Frozen anchors at the one-percent eigenvalue ratio.
  CHECK(rows.front().x == doctest::Approx(1e-2).epsilon(1e-12));
  CHECK(rows.front().order == 1);
  CHECK(rows.front().y_boundary == doctest::Approx(4.330127018922193e-5).epsilon(1e-9));
  CHECK(rows[32].order == 2);
  CHECK(rows[32].y_boundary == doctest::Approx(2.9115468457028516e-10).epsilon(1e-9));
  // Second order admits a far larger tolerance budget at small ratios.
  CHECK(rows[32].y_boundary < rows.front().y_boundary);
}

TEST_CASE("variance-budget region rows agree with the loose conditions") {
  const ObservableExpansion h = deuteron_hamiltonian();
  const SpectralOracle oracle(h);
  const Norms norms = h.one_norms();

  RegionScanSettings settings;
  settings.grid = 16;
  settings.orders = {1, 3};
  settings.x_min = 0.5;
  settings.x_max = 50.0;
  settings.mean_abs = std::abs(oracle.lambda_min());
  settings.traceless_one_norm = norms.traceless_one;
  settings.full_one_norm = norms.full_one;
  const auto rows = region_scan(RegionMode::VarianceBudget, settings);
  REQUIRE(rows.size() == 2 * 2 * 16);

  for (std::size_t i = 0; i < rows.size(); i += 2) {
    const RegionRow& cov = rows[i];
    const RegionRow& norm = rows[i + 1];
    CHECK(cov.mode == "variance_covariance");
    CHECK(norm.mode == "variance_norm");
    CHECK(cov.x == norm.x);
    CHECK(cov.order == norm.order);
    CHECK(cov.y_boundary <= norm.y_boundary * (1.0 + 1e-12));

    // The boundary is the smallest admissible tolerance: the loose condition
    // flips exactly there. The even moment uses the same variance model.
    ConditionInput input;
    input.order = cov.order;
    input.mean_abs = settings.mean_abs;
    input.variance = cov.x;
    input.even_moment = std::pow(norms.full_one, 2.0 * static_cast<double>(cov.order) - 2.0) *
                        (settings.mean_abs * settings.mean_abs + cov.x);
    input.traceless_one_norm = norms.traceless_one;
    input.full_one_norm = norms.full_one;
    input.eps_r = cov.y_boundary * (1.0 + 1e-9);
    CHECK(condition_loose(input).covariance_bound);
    input.eps_r = cov.y_boundary * (1.0 - 1e-9);
    CHECK(!condition_loose(input).covariance_bound);
    input.eps_r = norm.y_boundary * (1.0 + 1e-9);
    CHECK(condition_loose(input).norm_bound);
    input.eps_r = norm.y_boundary * (1.0 - 1e-9);
    CHECK(!condition_loose(input).norm_bound);
  }
}

TEST_CASE("first-order variance boundary at the reference mean") {
  const ObservableExpansion h = deuteron_hamiltonian();
  const SpectralOracle oracle(h);
  const Norms norms = h.one_norms();
  const double mean = std::abs(oracle.lambda_min());

  const auto admits = [&](double v) {
    ConditionInput input;
    input.order = 1;
    input.eps_r = 0.01;
    input.mean_abs = mean;
    input.variance = v;
    input.even_moment = mean * mean + v;  // exact at first order
    input.traceless_one_norm = norms.traceless_one;
    input.full_one_norm = norms.full_one;
    return condition_loose(input).covariance_bound;
  };

  REQUIRE(admits(0.5));
  REQUIRE(!admits(50.0));
  double lo = 0.5, hi = 50.0;
  for (int iter = 0; iter < 80; ++iter) {
    const double mid = 0.5 * (lo + hi);
    (admits(mid) ? lo : hi) = mid;
  }
  const double v_star = 0.5 * (lo + hi);
  CHECK(v_star == doctest::Approx(3.213512819).epsilon(1e-6));
  CHECK(v_star / (mean * mean) == doctest::Approx(0.7168679783).epsilon(1e-3));
}

TEST_CASE("region scan validates its settings") {
  RegionScanSettings settings;
  settings.grid = 8;
  CHECK_THROWS_AS(region_scan(RegionMode::EigenRatio, settings), std::invalid_argument);
  settings.grid = 16;
  settings.orders.clear();
  CHECK_THROWS_AS(region_scan(RegionMode::EigenRatio, settings), std::invalid_argument);
  settings.orders = {1};
  settings.x_min = 2.0;
  settings.x_max = 1.0;
  CHECK_THROWS_AS(region_scan(RegionMode::EigenRatio, settings), std::invalid_argument);
  settings.x_min = 0.0;
  settings.x_max = 0.0;
  CHECK_THROWS_AS(region_scan(RegionMode::VarianceBudget, settings), std::invalid_argument);
}
