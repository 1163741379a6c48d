#pragma once

#include <cstdint>
#include <vector>

#include "qestim/pauli.hpp"

namespace qestim {

/// Product-formula plan: order_j = 0 is the first-order product, j >= 1 the
/// symmetric Suzuki formula of order 2j. error_bound evaluates the analytic
/// operator-norm bound at the chosen interval count.
struct TrotterPlan {
  std::size_t order_j = 0;
  std::uint64_t intervals = 1;
  double error_bound = 0.0;
  double rho = 0.0;  // tau ||O||_1 for j = 0; 2 (tau ||O||_1) 5^(j-1) otherwise
};

/// First-order product bound (tau ||O||_1)^2 / r * exp(tau ||O||_1 / r).
double first_order_bound(const ObservableExpansion& obs, double tau, std::uint64_t r);

/// Intervals guaranteeing first_order_bound <= tau * eps / 2 (hence <= eps/2
/// for tau <= 1): r = ceil(max(tau ||O||_1, (2e/(eps tau)) (tau ||O||_1)^2)).
TrotterPlan first_order_intervals(const ObservableExpansion& obs, double tau, double eps);

/// Order-2j Suzuki bound (2 tau 5^(j-1) ||O||_1)^(2j+1) / (3 r^(2j))
/// * exp(2 (tau/r) 5^(j-1) ||O||_1).
double suzuki_bound(const ObservableExpansion& obs, double tau, std::uint64_t r, std::size_t j);

/// Intervals guaranteeing suzuki_bound <= tau * eps / 2:
/// r = ceil(rho_j max(1, ((4e/(3 eps)) 5^(j-1) ||O||_1)^(1/(2j)))).
TrotterPlan suzuki_intervals(const ObservableExpansion& obs, double tau, double eps,
                             std::size_t j);

/// Dense product-formula unitary: j = 0 gives
/// e^(i tau alpha0) [prod_k e^(i (tau/r) c_k P_k)]^r with terms in listed
/// order; j >= 1 applies the symmetric Suzuki recursion per interval.
Matrix build_suzuki(const ObservableExpansion& obs, double tau, std::uint64_t r, std::size_t j);

/// Largest singular value of (approx - exact).
double operator_norm_error(const Matrix& approx, const Matrix& exact);

/// Exponentials per interval: L terms for j = 0, 2 L 5^(j-1) for order 2j.
std::uint64_t exponentials_per_interval(std::size_t terms, std::size_t j);

/// Two-qubit-gate count of the controlled realization: 2 CNOTs per
/// exponential, exponentials_per_interval * r exponentials.
std::uint64_t controlled_two_qubit_gates(const TrotterPlan& plan, std::size_t terms);

// ---------------------------------------------------------------------------
// Controlled single-qubit evolution (two-CNOT construction)
// ---------------------------------------------------------------------------

/// Conventions used throughout: R_z(t) = diag(e^(i t/2), e^(-i t/2)),
/// R_y(t) = [[cos(t/2), sin(t/2)], [-sin(t/2), cos(t/2)]].
Matrix rz_matrix(double angle);
Matrix ry_matrix(double angle);

struct ControlledGate {
  enum class Kind { AncillaPhase, TargetRz, TargetRy, Cnot };
  Kind kind = Kind::Cnot;
  double angle = 0.0;
};

/// Controlled-U on (ancilla, target) built from the Euler form
/// U = e^(i theta0) R_z(theta1) R_y(theta2) R_z(theta3) with exactly two
/// CNOTs. Gates are stored in circuit order (index 0 acts first); the ancilla
/// is the most significant qubit.
struct ControlledCircuit {
  double theta0 = 0.0;
  double theta1 = 0.0;
  double theta2 = 0.0;
  double theta3 = 0.0;
  std::vector<ControlledGate> gates;
  Matrix target_unitary;  // the 2x2 operation applied when the ancilla is 1

  /// Assembled 4x4 matrix of the gate sequence.
  Matrix matrix() const;

  /// Reference controlled-U: |0><0| (x) I + |1><1| (x) u.
  static Matrix controlled(const Matrix& u);
};

/// Euler-angle extraction and circuit assembly for any 2x2 unitary.
ControlledCircuit controlled_from_unitary(const Matrix& u);

/// Controlled evolution exp(i delta H) of the real symmetric Hamiltonian
/// H = [[alpha, beta], [beta, gamma]]: phase delta (alpha+gamma)/2 plus a
/// rotation about (delta beta, 0, delta (alpha-gamma)/2).
ControlledCircuit controlled_angles(double alpha, double beta, double gamma, double delta);

}  // namespace qestim
