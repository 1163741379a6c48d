#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace qestim {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

enum class Pauli : std::uint8_t { I = 0, X = 1, Y = 2, Z = 3 };

char pauli_char(Pauli p);
Pauli pauli_from_char(char c);

/// Tensor product of single-qubit Paulis. Character 0 of the label acts on
/// qubit 0, which is the most significant bit of the computational basis index.
struct PauliString {
  std::vector<Pauli> axes;

  PauliString() = default;
  explicit PauliString(std::string_view label);

  std::size_t qubits() const { return axes.size(); }
  bool is_identity() const;
  std::string label() const;

  Matrix dense() const;

  /// Applies the operator to a state vector without forming the dense matrix.
  Vector apply(const Vector& state) const;

  /// Real part of <state|P|state>; the exact value is real for normalized states.
  double expectation(const Vector& state) const;

  bool operator==(const PauliString& other) const = default;
};

/// One term of a weighted Pauli expansion: weight * exp(i*phase) * P.
/// Hermitian observables with real coefficients carry phase 0 or pi.
struct PauliTerm {
  double weight = 0.0;  // nonnegative
  double phase = 0.0;   // radians
  PauliString string;

  cplx coefficient() const { return std::polar(weight, phase); }
};

struct Norms {
  double traceless_one = 0.0;  // sum of term weights
  double full_one = 0.0;       // traceless_one + |identity_coeff|
  double two = 0.0;            // sqrt(sum of squared weights)
};

/// O = identity_coeff * 1 + sum_k weight_k exp(i phase_k) P_k.
struct ObservableExpansion {
  double identity_coeff = 0.0;
  std::vector<PauliTerm> terms;

  std::size_t qubits() const;
  std::size_t term_count() const { return terms.size(); }

  /// Throws std::invalid_argument on negative weights, mismatched string
  /// lengths, duplicate strings, or identity strings among the terms.
  void validate() const;

  Norms one_norms() const;
  Matrix dense() const;

  /// Exact <state|O|state> evaluated term by term (no dense matrix).
  double expectation(const Vector& state) const;

  std::string to_json() const;
  static ObservableExpansion from_json(const std::string& text);
};

/// Exact Pauli decomposition of a Hermitian matrix with 2^n rows, n <= 10.
/// Terms with |coefficient| <= cutoff are dropped. Round-trips with dense().
ObservableExpansion decompose(const Matrix& dense, double cutoff = 1e-12);

/// Normalized pure state on n qubits, dense amplitudes (n <= 10).
struct PureState {
  Vector amplitudes;

  PureState() = default;
  explicit PureState(Vector amps);
  static PureState basis(std::size_t qubits, std::size_t index);

  std::size_t qubits() const;
  double norm_error() const;
};

}  // namespace qestim
