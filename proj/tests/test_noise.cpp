#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "qestim/deuteron.hpp"
#include "qestim/noise.hpp"
#include "qestim/pauli.hpp"
#include "qestim/rng.hpp"
#include "qestim/spectral.hpp"

using namespace qestim;

namespace {

ObservableExpansion random_obs(RngStream& rng) {
  ObservableExpansion obs;
  obs.identity_coeff = rng.uniform(-1.0, 1.0);
  obs.terms.push_back({rng.uniform(0.2, 1.5), 0.0, PauliString("X")});
  obs.terms.push_back({rng.uniform(0.2, 1.5), 0.0, PauliString("Z")});
  return obs;
}

PureState random_pure(RngStream& rng) {
  Vector v(2);
  v << cplx(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)),
      cplx(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
  v.normalize();
  return PureState(v);
}

double ptm_distance(const PauliTransferMatrix& a, const PauliTransferMatrix& b) {
  return (a.entries - b.entries).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("readout inversion and its singular point") {
  CHECK(mitigate_pauli(0.6, 0.1) == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(mitigate_pauli(-0.2, 0.0) == doctest::Approx(-0.2).epsilon(1e-14));
  CHECK_THROWS_AS(mitigate_pauli(0.3, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(mitigate_pauli(0.3, -0.01), std::invalid_argument);
}

TEST_CASE("calibration floors follow their closed forms") {
  const double p = 0.12;
  const double s = 1.0 - 2.0 * p;
  const double nc = 5000.0;
  CHECK(calibration_floor_terms(7.5, p, 5000) ==
        doctest::Approx(4.0 * 7.5 * p * (1.0 - p) / (s * s * s * s * nc)).epsilon(1e-13));
  CHECK(calibration_floor_ancilla(0.2, p, 5000) ==
        doctest::Approx(4.0 / 0.04 * p * (1.0 - p) / (s * s * s * s * nc)).epsilon(1e-13));
  CHECK(calibration_floor_terms(7.5, p, 0) == 0.0);
  CHECK_THROWS_AS(calibration_floor_ancilla(0.0, p, 100), std::invalid_argument);
}

TEST_CASE("term-averaged mitigation assembles value, variance and floors") {
  const ObservableExpansion h = deuteron_hamiltonian();
  const std::vector<double> raw = {0.22, -0.84};
  const std::vector<std::uint64_t> shots = {4000, 6000};
  const double p = 0.08;
  const double s = 1.0 - 2.0 * p;
  const std::uint64_t nc = 20000;

  const MitigatedEstimate est = mitigated_variance(h, raw, shots, p, nc);
  // terms[0] is the X term with weight 35 and phase pi, terms[1] the Z term.
  const double c0 = -35.0, c1 = 82.5;
  CHECK(est.value ==
        doctest::Approx(87.5 + c0 * raw[0] / s + c1 * raw[1] / s).epsilon(1e-12));
  const double stat = c0 * c0 * (1.0 - raw[0] * raw[0]) / 4000.0 / (s * s) +
                      c1 * c1 * (1.0 - raw[1] * raw[1]) / 6000.0 / (s * s);
  CHECK(est.statistical_variance == doctest::Approx(stat).epsilon(1e-12));

  const double dp_sq = p * (1.0 - p) / static_cast<double>(nc);
  const double exact = 4.0 * dp_sq / (s * s * s * s) *
                       (c0 * c0 * raw[0] * raw[0] + c1 * c1 * raw[1] * raw[1]);
  CHECK(est.calibration_floor_exact == doctest::Approx(exact).epsilon(1e-12));
  const double two_sq = 35.0 * 35.0 + 82.5 * 82.5;
  CHECK(est.calibration_floor ==
        doctest::Approx(calibration_floor_terms(two_sq, p, nc)).epsilon(1e-13));
  // Raw means live in [-1, 1], so the norm floor dominates the exact one.
  CHECK(est.calibration_floor_exact <= est.calibration_floor * (1.0 + 1e-12));
  CHECK(est.total_variance() ==
        doctest::Approx(est.statistical_variance + est.calibration_floor).epsilon(1e-13));
  CHECK(est.total_shots == 10000);

  CHECK_THROWS_AS(mitigated_variance(h, {0.2}, shots, p, nc), std::invalid_argument);
  CHECK_THROWS_AS(mitigated_variance(h, {1.4, 0.0}, shots, p, nc), std::invalid_argument);
  CHECK_THROWS_AS(mitigated_variance(h, raw, {0, 100}, p, nc), std::invalid_argument);
  CHECK_THROWS_AS(mitigated_variance(h, raw, shots, p, 0), std::invalid_argument);
}

TEST_CASE("ancilla mitigation assembles value, variance and floors") {
  const double tau = 0.15, raw = -0.31, p = 0.1;
  const double s = 1.0 - 2.0 * p;
  const MitigatedEstimate est = mitigated_variance_ancilla(tau, raw, 8000, p, 30000);
  CHECK(est.value == doctest::Approx(-raw / (s * tau)).epsilon(1e-12));
  CHECK(est.statistical_variance ==
        doctest::Approx((1.0 - raw * raw) / 8000.0 / (s * s * tau * tau)).epsilon(1e-12));
  const double dp_sq = p * (1.0 - p) / 30000.0;
  CHECK(est.calibration_floor_exact ==
        doctest::Approx(4.0 / (tau * tau) * dp_sq * raw * raw / (s * s * s * s)).epsilon(1e-12));
  CHECK(est.calibration_floor ==
        doctest::Approx(calibration_floor_ancilla(tau, p, 30000)).epsilon(1e-13));
  CHECK(est.calibration_floor_exact <= est.calibration_floor * (1.0 + 1e-12));
  CHECK_THROWS_AS(mitigated_variance_ancilla(0.0, raw, 100, p, 100), std::invalid_argument);
  CHECK_THROWS_AS(mitigated_variance_ancilla(tau, raw, 0, p, 100), std::invalid_argument);
}

TEST_CASE("mitigation with a known flip rate is unbiased and honest") {
  const ObservableExpansion h = deuteron_hamiltonian();
  const SpectralOracle oracle(h);
  const double truth = oracle.lambda_min();

  // Exact per-term expectations from the closed-form ground state.
  const double t = 35.0 / (170.0 - truth);
  const double mean_x = 2.0 * t / (1.0 + t * t);
  const double mean_z = (t * t - 1.0) / (1.0 + t * t);

  for (double p : {0.05, 0.2, 0.35}) {
    const double s = 1.0 - 2.0 * p;
    const std::uint64_t shots = 20000;
    const int replicas = 100;
    double sum = 0.0, sum_sq = 0.0, claimed = 0.0;
    for (int r = 0; r < replicas; ++r) {
      RngStream rng = RngStream::child(700, static_cast<std::uint64_t>(r));
      const double raw_x =
          2.0 * static_cast<double>(rng.binomial(shots, 0.5 * (1.0 + s * mean_x))) / shots - 1.0;
      const double raw_z =
          2.0 * static_cast<double>(rng.binomial(shots, 0.5 * (1.0 + s * mean_z))) / shots - 1.0;
      const MitigatedEstimate est =
          mitigated_variance(h, {raw_x, raw_z}, {shots, shots}, p, 1000000);
      sum += est.value;
      claimed += est.statistical_variance;
    }
    for (int r = 0; r < replicas; ++r) {
      RngStream rng = RngStream::child(700, static_cast<std::uint64_t>(r));
      const double raw_x =
          2.0 * static_cast<double>(rng.binomial(shots, 0.5 * (1.0 + s * mean_x))) / shots - 1.0;
      const double raw_z =
          2.0 * static_cast<double>(rng.binomial(shots, 0.5 * (1.0 + s * mean_z))) / shots - 1.0;
      const MitigatedEstimate est =
          mitigated_variance(h, {raw_x, raw_z}, {shots, shots}, p, 1000000);
      sum_sq += (est.value - sum / replicas) * (est.value - sum / replicas);
    }
    const double mean = sum / replicas;
    const double var = sum_sq / (replicas - 1);
    CHECK(std::abs(mean - truth) < 4.0 * std::sqrt(var / replicas));
    CHECK(claimed / replicas == doctest::Approx(var).epsilon(0.5));
  }
}

TEST_CASE("optimal split matches the closed-form budget") {
  const ObservableExpansion h = deuteron_hamiltonian();
  const double eps = 0.01 * 2.1172416446746034;
  for (double p : {0.01, 0.0865, 0.2715, 0.3567}) {
    const double s = 1.0 - 2.0 * p;
    const double a = 117.5 * 117.5 / (s * s);
    const double b = 4.0 * (35.0 * 35.0 + 82.5 * 82.5) * p * (1.0 - p) / (s * s * s * s);
    const double n_star = (std::sqrt(a) + std::sqrt(b)) * (std::sqrt(a) + std::sqrt(b)) /
                          (eps * eps);
    const NoiseBudget budget = optimize_budget(h, p, eps);
    CHECK(budget.feasible);
    CHECK(budget.total_shots == doctest::Approx(n_star).epsilon(1e-6));
    CHECK(budget.achieved_variance <= eps * eps * (1.0 + 1e-9));
    // Optimal ratio of calibration to measurement shots is sqrt(b/a).
    CHECK(budget.calibration_shots / budget.measurement_shots ==
          doctest::Approx(std::sqrt(b / a)).epsilon(1e-4));
  }
}

TEST_CASE("vanishing flip rate recovers the noiseless budget") {
  const ObservableExpansion h = deuteron_hamiltonian();
  const double eps = 0.01 * 2.1172416446746034;
  const NoiseBudget budget = optimize_budget(h, 1e-12, eps);
  const double noiseless = 117.5 * 117.5 / (eps * eps);
  CHECK(budget.total_shots == doctest::Approx(noiseless).epsilon(1e-5));
  CHECK(budget.calibration_fraction < 1e-2);
}

TEST_CASE("strong readout noise carries the frozen overhead") {
  const ObservableExpansion h = deuteron_hamiltonian();
  const double eps = 0.01 * 2.1172416446746034;
  const NoiseBudget budget = optimize_budget(h, 0.3567, eps);
  const double noiseless = 117.5 * 117.5 / (eps * eps);
  CHECK(budget.total_shots / noiseless == doctest::Approx(153.3901761502391).epsilon(1e-6));
  CHECK(budget.calibration_fraction == doctest::Approx(0.7182752278140148).epsilon(1e-6));
}

TEST_CASE("up-front calibration budgets") {
  const ObservableExpansion h = deuteron_hamiltonian();
  const double eps = 0.01 * 2.1172416446746034;

  // Mild noise: a fixed 1e7 calibration stays within 3x of the noiseless
  // shot count, and above the jointly optimized split.
  const NoiseBudget fixed = precomputed_budget(h, 0.05, eps, 1e7);
  const NoiseBudget opt = optimize_budget(h, 0.05, eps);
  CHECK(fixed.feasible);
  CHECK(fixed.calibration_shots == 1e7);
  const double noiseless = 117.5 * 117.5 / (eps * eps);
  CHECK(fixed.total_shots / noiseless ==
        doctest::Approx(2.8904545357597113).epsilon(1e-6));
  CHECK(fixed.total_shots >= opt.total_shots);
  CHECK(fixed.achieved_variance <= eps * eps * (1.0 + 1e-9));

  // Strong noise: the same calibration cannot even reach the floor.
  const NoiseBudget stuck = precomputed_budget(h, 0.3567, eps, 1e7);
  CHECK(!stuck.feasible);
  CHECK(stuck.measurement_shots == 0.0);
  CHECK(stuck.achieved_variance > eps * eps);

  CHECK_THROWS_AS(precomputed_budget(h, 0.05, eps, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(optimize_budget(h, 0.5, eps), std::invalid_argument);
  CHECK_THROWS_AS(optimize_budget(h, 0.05, 0.0), std::invalid_argument);
}

TEST_CASE("ancilla budget variants share the coefficient structure") {
  const double tau = 0.15, p = 0.1;
  const double eps = 0.02;
  const double s = 1.0 - 2.0 * p;
  const double a = 1.0 / (s * s * tau * tau);
  const double b = 4.0 / (tau * tau) * p * (1.0 - p) / (s * s * s * s);
  const NoiseBudget budget = optimize_budget_ancilla(tau, p, eps);
  const double n_star =
      (std::sqrt(a) + std::sqrt(b)) * (std::sqrt(a) + std::sqrt(b)) / (eps * eps);
  // The two shot counts are rounded up separately.
  CHECK(budget.total_shots >= n_star - 1e-9);
  CHECK(budget.total_shots <= n_star + 2.0);
  CHECK(budget.achieved_variance <= eps * eps * (1.0 + 1e-9));

  const NoiseBudget fixed = precomputed_budget_ancilla(tau, p, eps, 1e8);
  CHECK(fixed.feasible);
  CHECK(fixed.achieved_variance <= eps * eps * (1.0 + 1e-9));
  CHECK_THROWS_AS(optimize_budget_ancilla(0.0, p, eps), std::invalid_argument);
}

TEST_CASE("reduced ancilla dynamics match the spectral overlap sum") {
  RngStream rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    const ObservableExpansion obs = random_obs(rng);
    const SpectralOracle oracle(obs);
    const PureState state = random_pure(rng);
    const double tau = rng.uniform(0.005, 0.5) / obs.one_norms().full_one;
    const AncillaChannel ch = ancilla_channel(obs, state, tau);

    // Independent path: overlap-weighted sum of eigenphases.
    const Eigen::VectorXd w = oracle.overlaps(state);
    cplx kappa(0.0, 0.0);
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      kappa += w[i] * std::exp(cplx(0.0, tau * oracle.eigenvalues()[i]));
    }
    CHECK(std::abs(ch.kappa - kappa) < 1e-12);
    CHECK(ch.nu * ch.nu + std::norm(ch.kappa) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ch.dephasing_probability == doctest::Approx(1.0 - std::norm(ch.kappa)).epsilon(1e-12));

    // PTM leaves I and Z fixed and rotates/shrinks the XY block by kappa.
    Eigen::Matrix4d expect = Eigen::Matrix4d::Identity();
    expect(1, 1) = ch.kappa.real();
    expect(1, 2) = -ch.kappa.imag();
    expect(2, 1) = ch.kappa.imag();
    expect(2, 2) = ch.kappa.real();
    CHECK((ch.ptm.entries - expect).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("ancilla channel factorizes into dephasing and rotation") {
  RngStream rng(42);
  for (int trial = 0; trial < 50; ++trial) {
    const ObservableExpansion obs = random_obs(rng);
    const PureState state = random_pure(rng);
    const double tau = rng.uniform(0.005, 0.5) / obs.one_norms().full_one;
    const AncillaChannel ch = ancilla_channel(obs, state, tau);

    PauliTransferMatrix dr, rd;
    dr.entries = dephasing_ptm(ch.dephasing_probability).entries *
                 rotation_ptm(ch.rotation_angle).entries;
    rd.entries = rotation_ptm(ch.rotation_angle).entries *
                 dephasing_ptm(ch.dephasing_probability).entries;
    CHECK(ptm_distance(ch.ptm, dr) < 1e-12);
    CHECK(ptm_distance(ch.ptm, rd) < 1e-12);  // the factors commute

    // Kraus form: A0 = diag(1, kappa), A1 = |1><1| sqrt(1 - |kappa|^2).
    Matrix a0 = Matrix::Zero(2, 2);
    a0(0, 0) = 1.0;
    a0(1, 1) = ch.kappa;
    Matrix a1 = Matrix::Zero(2, 2);
    a1(1, 1) = ch.nu;
    CHECK(ptm_distance(ch.ptm, kraus_ptm({a0, a1})) < 1e-12);
  }
}

TEST_CASE("dephasing and rotation transfer matrices") {
  const PauliTransferMatrix d = dephasing_ptm(0.36);
  CHECK(d.entries(0, 0) == 1.0);
  CHECK(d.entries(3, 3) == 1.0);
  CHECK(d.entries(1, 1) == doctest::Approx(0.8).epsilon(1e-14));
  CHECK(d.entries(2, 2) == doctest::Approx(0.8).epsilon(1e-14));
  CHECK_THROWS_AS(dephasing_ptm(-0.01), std::invalid_argument);
  CHECK_THROWS_AS(dephasing_ptm(1.01), std::invalid_argument);

  const double theta = 0.7;
  const PauliTransferMatrix r = rotation_ptm(theta);
  CHECK(r.entries(1, 1) == doctest::Approx(std::cos(theta)).epsilon(1e-14));
  CHECK(r.entries(1, 2) == doctest::Approx(-std::sin(theta)).epsilon(1e-14));
  CHECK(r.entries(2, 1) == doctest::Approx(std::sin(theta)).epsilon(1e-14));
  CHECK(r.entries(0, 0) == 1.0);
  CHECK(r.entries(3, 3) == 1.0);
}

TEST_CASE("identity channel from identity Kraus set") {
  Matrix id = Matrix::Identity(2, 2);
  const PauliTransferMatrix ptm = kraus_ptm({id});
  CHECK((ptm.entries - Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("depolarization scales the traceless rows") {
  PauliTransferMatrix base;
  base.entries << 1.0, 0.0, 0.0, 0.0,  //
      0.1, 0.9, -0.2, 0.0,             //
      0.0, 0.2, 0.9, 0.0,              //
      0.05, 0.0, 0.0, 0.97;
  const PauliTransferMatrix none = depolarize(base, 0.0);
  CHECK(ptm_distance(none, base) == 0.0);

  const PauliTransferMatrix mixed = depolarize(base, 0.25);
  CHECK((mixed.entries.row(0) - base.entries.row(0)).cwiseAbs().maxCoeff() == 0.0);
  for (int row = 1; row < 4; ++row) {
    for (int col = 0; col < 4; ++col) {
      CHECK(mixed.entries(row, col) ==
            doctest::Approx(0.75 * base.entries(row, col)).epsilon(1e-14));
    }
  }
}
