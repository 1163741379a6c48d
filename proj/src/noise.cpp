#include "qestim/noise.hpp"

#include <cmath>
#include <stdexcept>

#include "qestim/spectral.hpp"

namespace qestim {

namespace {

void check_p(double p_hat) {
  if (!(p_hat >= 0.0 && p_hat < 0.5)) {
    throw std::invalid_argument("readout correction singular: p must lie in [0, 0.5)");
  }
}

}  // namespace

double mitigate_pauli(double raw_mean, double p_hat) {
  check_p(p_hat);
  return raw_mean / (1.0 - 2.0 * p_hat);
}

double calibration_floor_terms(double two_norm_sq, double p_hat,
                               std::uint64_t calibration_shots) {
  check_p(p_hat);
  if (calibration_shots == 0) return 0.0;
  const double s = 1.0 - 2.0 * p_hat;
  return 4.0 * two_norm_sq / (s * s * s * s) * p_hat * (1.0 - p_hat) /
         static_cast<double>(calibration_shots);
}

double calibration_floor_ancilla(double tau, double p_hat, std::uint64_t calibration_shots) {
  check_p(p_hat);
  if (tau == 0.0) throw std::invalid_argument("calibration_floor_ancilla: tau must be nonzero");
  if (calibration_shots == 0) return 0.0;
  const double s = 1.0 - 2.0 * p_hat;
  return 4.0 / (tau * tau) * p_hat * (1.0 - p_hat) /
         (s * s * s * s * static_cast<double>(calibration_shots));
}

MitigatedEstimate mitigated_variance(const ObservableExpansion& obs,
                                     const std::vector<double>& raw_means,
                                     const std::vector<std::uint64_t>& shots_per_term,
                                     double p_hat, std::uint64_t calibration_shots) {
  check_p(p_hat);
  if (raw_means.size() != obs.term_count() || shots_per_term.size() != obs.term_count()) {
    throw std::invalid_argument("mitigated_variance: per-term vectors must match the expansion");
  }
  if (calibration_shots == 0) {
    throw std::invalid_argument("mitigated_variance: need at least one calibration shot");
  }
  const double s = 1.0 - 2.0 * p_hat;
  const double dp_sq = p_hat * (1.0 - p_hat) / static_cast<double>(calibration_shots);

  MitigatedEstimate out;
  out.value = obs.identity_coeff;
  out.calibration_shots = calibration_shots;
  double floor_exact = 0.0;
  for (std::size_t k = 0; k < obs.term_count(); ++k) {
    if (shots_per_term[k] == 0) {
      throw std::invalid_argument("mitigated_variance: zero shots for a term");
    }
    const double raw = raw_means[k];
    if (!(raw >= -1.0 && raw <= 1.0)) {
      throw std::invalid_argument("mitigated_variance: raw mean outside [-1, 1]");
    }
    const double coeff = obs.terms[k].coefficient().real();
    out.value += coeff * raw / s;
    out.statistical_variance +=
        coeff * coeff * (1.0 - raw * raw) / static_cast<double>(shots_per_term[k]) / (s * s);
    // d/dp [raw/(1-2p)] = 2 raw/(1-2p)^2; linear error propagation in p_hat.
    floor_exact += coeff * coeff * raw * raw;
    out.total_shots += shots_per_term[k];
  }
  out.calibration_floor_exact = 4.0 * dp_sq / (s * s * s * s) * floor_exact;
  out.calibration_floor = calibration_floor_terms(obs.one_norms().two * obs.one_norms().two,
                                                  p_hat, calibration_shots);
  return out;
}

MitigatedEstimate mitigated_variance_ancilla(double tau, double raw_z_mean, std::uint64_t shots,
                                             double p_hat, std::uint64_t calibration_shots) {
  check_p(p_hat);
  if (tau == 0.0) throw std::invalid_argument("mitigated_variance_ancilla: tau must be nonzero");
  if (shots == 0 || calibration_shots == 0) {
    throw std::invalid_argument("mitigated_variance_ancilla: need shots on both channels");
  }
  const double s = 1.0 - 2.0 * p_hat;
  const double dp_sq = p_hat * (1.0 - p_hat) / static_cast<double>(calibration_shots);

  MitigatedEstimate out;
  out.value = -raw_z_mean / (s * tau);
  out.statistical_variance =
      (1.0 - raw_z_mean * raw_z_mean) / static_cast<double>(shots) / (s * s * tau * tau);
  out.calibration_floor_exact =
      4.0 / (tau * tau) * dp_sq / (s * s) * raw_z_mean * raw_z_mean / (s * s);
  out.calibration_floor = calibration_floor_ancilla(tau, p_hat, calibration_shots);
  out.total_shots = shots;
  out.calibration_shots = calibration_shots;
  return out;
}

namespace {

// Shared budget math: minimize N + N_C subject to a/N + b/N_C <= eps^2.
NoiseBudget budget_from_coefficients(double a, double b, double target_eps) {
  if (!(target_eps > 0.0)) throw std::invalid_argument("budget: eps must be positive");
  const double eps_sq = target_eps * target_eps;
  NoiseBudget out;
  if (b <= 0.0) {
    out.measurement_shots = std::ceil(a / eps_sq);
    out.calibration_shots = 0.0;
    out.total_shots = out.measurement_shots;
    out.calibration_fraction = 0.0;
    out.achieved_variance = a / out.measurement_shots;
    return out;
  }
  // Given the ratio rho = N_C / N the tight constraint gives
  //   N = (a + b/rho)/eps^2  and  N_tot = (1 + rho) N.
  const auto total_for = [&](double log_rho) {
    const double rho = std::exp(log_rho);
    return (1.0 + rho) * (a + b / rho) / eps_sq;
  };
  double lo = std::log(1e-9);
  double hi = std::log(1e9);
  const double golden = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - golden * (hi - lo);
  double x2 = lo + golden * (hi - lo);
  double f1 = total_for(x1);
  double f2 = total_for(x2);
  for (int iter = 0; iter < 200; ++iter) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - golden * (hi - lo);
      f1 = total_for(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + golden * (hi - lo);
      f2 = total_for(x2);
    }
  }
  const double rho = std::exp(0.5 * (lo + hi));
  const double n = (a + b / rho) / eps_sq;
  out.measurement_shots = std::ceil(n);
  out.calibration_shots = std::ceil(rho * n);
  out.total_shots = out.measurement_shots + out.calibration_shots;
  out.calibration_fraction = out.calibration_shots / out.total_shots;
  out.achieved_variance = a / out.measurement_shots + b / out.calibration_shots;
  return out;
}

NoiseBudget budget_precomputed(double a, double b, double target_eps, double n_c0) {
  if (!(target_eps > 0.0)) throw std::invalid_argument("budget: eps must be positive");
  if (!(n_c0 >= 1.0)) throw std::invalid_argument("budget: calibration size must be >= 1");
  const double eps_sq = target_eps * target_eps;
  const double floor = b / n_c0;
  NoiseBudget out;
  out.calibration_shots = n_c0;
  if (floor >= eps_sq) {
    out.feasible = false;
    out.measurement_shots = 0.0;
    out.total_shots = n_c0;
    out.calibration_fraction = 1.0;
    out.achieved_variance = floor;
    return out;
  }
  out.measurement_shots = std::ceil(a / (eps_sq - floor));
  out.total_shots = out.measurement_shots + n_c0;
  out.calibration_fraction = n_c0 / out.total_shots;
  out.achieved_variance = a / out.measurement_shots + floor;
  return out;
}

double term_coefficient_a(const ObservableExpansion& obs, double p) {
  const double one = obs.one_norms().traceless_one;
  const double s = 1.0 - 2.0 * p;
  return one * one / (s * s);
}

double term_coefficient_b(const ObservableExpansion& obs, double p) {
  const Norms norms = obs.one_norms();
  const double s = 1.0 - 2.0 * p;
  return 4.0 * norms.two * norms.two * p * (1.0 - p) / (s * s * s * s);
}

double ancilla_coefficient_a(double tau, double p) {
  const double s = 1.0 - 2.0 * p;
  return 1.0 / (s * s * tau * tau);
}

double ancilla_coefficient_b(double tau, double p) {
  const double s = 1.0 - 2.0 * p;
  return 4.0 / (tau * tau) * p * (1.0 - p) / (s * s * s * s);
}

}  // namespace

NoiseBudget optimize_budget(const ObservableExpansion& obs, double p, double target_eps) {
  check_p(p);
  return budget_from_coefficients(term_coefficient_a(obs, p), term_coefficient_b(obs, p),
                                  target_eps);
}

NoiseBudget precomputed_budget(const ObservableExpansion& obs, double p, double target_eps,
                               double n_c0) {
  check_p(p);
  return budget_precomputed(term_coefficient_a(obs, p), term_coefficient_b(obs, p), target_eps,
                            n_c0);
}

NoiseBudget optimize_budget_ancilla(double tau, double p, double target_eps) {
  check_p(p);
  if (tau == 0.0) throw std::invalid_argument("budget: tau must be nonzero");
  return budget_from_coefficients(ancilla_coefficient_a(tau, p), ancilla_coefficient_b(tau, p),
                                  target_eps);
}

NoiseBudget precomputed_budget_ancilla(double tau, double p, double target_eps, double n_c0) {
  check_p(p);
  if (tau == 0.0) throw std::invalid_argument("budget: tau must be nonzero");
  return budget_precomputed(ancilla_coefficient_a(tau, p), ancilla_coefficient_b(tau, p),
                            target_eps, n_c0);
}

AncillaChannel ancilla_channel(const ObservableExpansion& obs, const PureState& state,
                               double tau) {
  if (state.norm_error() > 1e-8) {
    throw std::invalid_argument("ancilla_channel: state must be normalized");
  }
  SpectralOracle oracle(obs);
  const Matrix u = oracle.evolution(tau);
  AncillaChannel ch;
  ch.kappa = state.amplitudes.dot(u * state.amplitudes);
  const double mag_sq = std::norm(ch.kappa);
  ch.nu = std::sqrt(std::max(0.0, 1.0 - mag_sq));
  ch.dephasing_probability = 1.0 - mag_sq;
  ch.rotation_angle = std::atan2(ch.kappa.imag(), ch.kappa.real());
  ch.ptm.entries = Eigen::Matrix4d::Identity();
  ch.ptm.entries(1, 1) = ch.kappa.real();
  ch.ptm.entries(1, 2) = -ch.kappa.imag();
  ch.ptm.entries(2, 1) = ch.kappa.imag();
  ch.ptm.entries(2, 2) = ch.kappa.real();
  return ch;
}

PauliTransferMatrix dephasing_ptm(double p_z) {
  if (!(p_z >= 0.0 && p_z <= 1.0)) {
    throw std::invalid_argument("dephasing_ptm: probability outside [0, 1]");
  }
  PauliTransferMatrix ptm;
  const double shrink = std::sqrt(1.0 - p_z);
  ptm.entries = Eigen::Matrix4d::Identity();
  ptm.entries(1, 1) = shrink;
  ptm.entries(2, 2) = shrink;
  return ptm;
}

PauliTransferMatrix rotation_ptm(double theta) {
  PauliTransferMatrix ptm;
  ptm.entries = Eigen::Matrix4d::Identity();
  ptm.entries(1, 1) = std::cos(theta);
  ptm.entries(1, 2) = -std::sin(theta);
  ptm.entries(2, 1) = std::sin(theta);
  ptm.entries(2, 2) = std::cos(theta);
  return ptm;
}

PauliTransferMatrix kraus_ptm(const std::vector<Matrix>& kraus) {
  if (kraus.empty()) throw std::invalid_argument("kraus_ptm: empty operator list");
  Matrix paulis[4];
  paulis[0] = Matrix::Identity(2, 2);
  paulis[1] = Matrix{{cplx(0, 0), cplx(1, 0)}, {cplx(1, 0), cplx(0, 0)}};
  paulis[2] = Matrix{{cplx(0, 0), cplx(0, -1)}, {cplx(0, 1), cplx(0, 0)}};
  paulis[3] = Matrix{{cplx(1, 0), cplx(0, 0)}, {cplx(0, 0), cplx(-1, 0)}};

  PauliTransferMatrix ptm;
  for (int j = 0; j < 4; ++j) {
    Matrix image = Matrix::Zero(2, 2);
    for (const Matrix& a : kraus) {
      if (a.rows() != 2 || a.cols() != 2) {
        throw std::invalid_argument("kraus_ptm: operators must be 2x2");
      }
      image += a * paulis[j] * a.adjoint();
    }
    for (int i = 0; i < 4; ++i) {
      ptm.entries(i, j) = 0.5 * (paulis[i] * image).trace().real();
    }
  }
  return ptm;
}

PauliTransferMatrix depolarize(const PauliTransferMatrix& ptm, double p_d) {
  if (!(p_d >= 0.0 && p_d <= 1.0)) {
    throw std::invalid_argument("depolarize: probability outside [0, 1]");
  }
  PauliTransferMatrix out = ptm;
  out.entries.block<3, 4>(1, 0) *= 1.0 - p_d;
  return out;
}

}  // namespace qestim
