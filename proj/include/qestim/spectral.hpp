#pragma once

#include <cstddef>
#include <vector>

#include "qestim/pauli.hpp"

namespace qestim {

/// Odd moments m_k = <O^(2k+1)> for k = 0..max_k, plus the derived first and
/// second moments used by the advantage conditions.
struct MomentTable {
  std::vector<double> odd;    // odd[k] = <O^(2k+1)>
  double mean = 0.0;          // <O>, equals odd[0]
  double second = 0.0;        // <O^2>
  double variance = 0.0;      // <O^2> - <O>^2

  double even(std::size_t k) const;  // <O^(2k)> cached up to 2*max_k
  std::vector<double> even_moments;  // even_moments[k] = <O^(2k)>
};

/// Exact eigendecomposition of a dense Hermitian observable; the reference
/// against which sampled estimators are checked. Dense path, n <= 10 qubits.
class SpectralOracle {
 public:
  explicit SpectralOracle(const ObservableExpansion& obs);
  explicit SpectralOracle(const Matrix& dense);

  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  const Matrix& eigenvectors() const { return eigenvectors_; }
  double lambda_min() const { return eigenvalues_[0]; }
  double lambda_max() const { return eigenvalues_[eigenvalues_.size() - 1]; }
  double spectral_radius() const;

  /// Ground state (lowest eigenvalue).
  PureState ground_state() const;
  PureState eigenstate(std::size_t index) const;

  /// Squared overlaps |<lambda_i|state>|^2.
  Eigen::VectorXd overlaps(const PureState& state) const;

  double expectation(const PureState& state) const;

  /// <sin(tau O)> evaluated in the eigenbasis.
  double sine_expectation(const PureState& state, double tau) const;

  /// exp(i tau O) as a dense matrix.
  Matrix evolution(double tau) const;

  /// Odd moments up to m_max_k and even moments up to <O^(2 max_k)>.
  MomentTable moments(const PureState& state, std::size_t max_k) const;

 private:
  Eigen::VectorXd eigenvalues_;
  Matrix eigenvectors_;
};

/// R_O = |<O>| / ||traceless part||_1 and its state-independent maximum
/// max(|alpha_0| + ||O_T||_1) / ||O_T||_1 (attained by an extremal eigenstate).
struct RatioR {
  double value = 0.0;
  double maximum = 0.0;
};

RatioR ratio_R(const ObservableExpansion& obs, const PureState& state);

}  // namespace qestim
