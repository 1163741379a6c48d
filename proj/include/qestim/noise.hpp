#pragma once

#include <cstdint>
#include <vector>

#include "qestim/pauli.hpp"

namespace qestim {

/// Inverts the symmetric readout channel on a +1/-1 mean: raw/(1 - 2 p_hat).
/// Throws when the correction is singular (p_hat >= 0.5).
double mitigate_pauli(double raw_mean, double p_hat);

/// Mitigated estimate with the error budget split into the shot-noise part
/// and the calibration floor caused by the uncertainty of p_hat.
struct MitigatedEstimate {
  double value = 0.0;
  double statistical_variance = 0.0;  // raw variance / (1-2p)^2
  double calibration_floor = 0.0;     // norm bound on the floor
  double calibration_floor_exact = 0.0;  // linear error propagation with the raw means
  std::uint64_t total_shots = 0;
  std::uint64_t calibration_shots = 0;

  double total_variance() const { return statistical_variance + calibration_floor; }
};

/// Term-averaging estimate from raw (noisy) per-term means. The floor bound
/// is 4 ||O_T||_2^2 p(1-p) / ((1-2p)^4 N_C).
MitigatedEstimate mitigated_variance(const ObservableExpansion& obs,
                                     const std::vector<double>& raw_means,
                                     const std::vector<std::uint64_t>& shots_per_term,
                                     double p_hat, std::uint64_t calibration_shots);

/// Ancilla-readout variant for the phase-estimation estimator at time step
/// tau; the floor bound is (4/tau^2) p(1-p) / ((1-2p)^4 N_C).
MitigatedEstimate mitigated_variance_ancilla(double tau, double raw_z_mean, std::uint64_t shots,
                                             double p_hat, std::uint64_t calibration_shots);

/// Calibration floor bounds alone.
double calibration_floor_terms(double two_norm_sq, double p_hat, std::uint64_t calibration_shots);
double calibration_floor_ancilla(double tau, double p_hat, std::uint64_t calibration_shots);

/// Measurement/calibration split for a target additive error.
struct NoiseBudget {
  double measurement_shots = 0.0;
  double calibration_shots = 0.0;
  double total_shots = 0.0;
  double calibration_fraction = 0.0;
  double achieved_variance = 0.0;  // constraint value at the returned split
  bool feasible = true;
};

/// Minimizes measurement + calibration shots subject to
///   ||O_T||_1^2 / ((1-2p)^2 N) + floor(N_C) <= eps^2
/// by golden-section search over the allocation ratio.
NoiseBudget optimize_budget(const ObservableExpansion& obs, double p, double target_eps);

/// Same constraint with the calibration size frozen at n_c0 (a calibration
/// performed up front); infeasible when the floor alone exceeds the target.
NoiseBudget precomputed_budget(const ObservableExpansion& obs, double p, double target_eps,
                               double n_c0);

/// Ancilla-readout variants of the two optimizers (statistical term
/// 1 / ((1-2p)^2 tau^2 N)).
NoiseBudget optimize_budget_ancilla(double tau, double p, double target_eps);
NoiseBudget precomputed_budget_ancilla(double tau, double p, double target_eps, double n_c0);

/// Single-qubit Pauli transfer matrix, basis order (I, X, Y, Z);
/// column j holds the expansion of the channel applied to P_j.
struct PauliTransferMatrix {
  Eigen::Matrix4d entries = Eigen::Matrix4d::Identity();
};

/// Reduced ancilla dynamics of the controlled-evolution circuit:
/// kappa = <Psi|exp(i tau O)|Psi> determines a phase-damping rotation.
struct AncillaChannel {
  cplx kappa;
  double nu = 0.0;                     // sqrt(1 - |kappa|^2)
  double dephasing_probability = 0.0;  // p_z = 1 - |kappa|^2
  double rotation_angle = 0.0;         // theta = atan2(Im kappa, Re kappa)
  PauliTransferMatrix ptm;
};

AncillaChannel ancilla_channel(const ObservableExpansion& obs, const PureState& state, double tau);

/// Phase damping: diag(1, sqrt(1-p_z), sqrt(1-p_z), 1).
PauliTransferMatrix dephasing_ptm(double p_z);

/// Z-axis rotation by theta in PTM form.
PauliTransferMatrix rotation_ptm(double theta);

/// Brute-force PTM of a channel given by a list of 2x2 Kraus operators.
PauliTransferMatrix kraus_ptm(const std::vector<Matrix>& kraus);

/// Composes qubit depolarizing noise (1-p_d) rho + (p_d/2) Tr[rho] 1 with the
/// channel: scales the non-identity rows by (1-p_d).
PauliTransferMatrix depolarize(const PauliTransferMatrix& ptm, double p_d);

}  // namespace qestim
