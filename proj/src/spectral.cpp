#include "qestim/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <complex>
#include <stdexcept>

namespace qestim {

double MomentTable::even(std::size_t k) const {
  if (k >= even_moments.size()) {
    throw std::out_of_range("MomentTable::even: order not tabulated");
  }
  return even_moments[k];
}

namespace {

Eigen::VectorXd solve_spectrum(const Matrix& dense, Matrix* vectors) {
  if (dense.rows() != dense.cols() || dense.rows() == 0) {
    throw std::invalid_argument("SpectralOracle: matrix must be square");
  }
  if ((dense - dense.adjoint()).cwiseAbs().maxCoeff() > 1e-10) {
    throw std::invalid_argument("SpectralOracle: matrix must be Hermitian");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> solver(dense);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("SpectralOracle: eigendecomposition failed");
  }
  *vectors = solver.eigenvectors();
  return solver.eigenvalues();
}

}  // namespace

SpectralOracle::SpectralOracle(const ObservableExpansion& obs) {
  eigenvalues_ = solve_spectrum(obs.dense(), &eigenvectors_);
}

SpectralOracle::SpectralOracle(const Matrix& dense) {
  eigenvalues_ = solve_spectrum(dense, &eigenvectors_);
}

double SpectralOracle::spectral_radius() const {
  return std::max(std::abs(lambda_min()), std::abs(lambda_max()));
}

PureState SpectralOracle::ground_state() const { return eigenstate(0); }

PureState SpectralOracle::eigenstate(std::size_t index) const {
  if (index >= static_cast<std::size_t>(eigenvalues_.size())) {
    throw std::out_of_range("SpectralOracle::eigenstate: index out of range");
  }
  return PureState(eigenvectors_.col(static_cast<Eigen::Index>(index)));
}

Eigen::VectorXd SpectralOracle::overlaps(const PureState& state) const {
  if (state.amplitudes.size() != eigenvalues_.size()) {
    throw std::invalid_argument("SpectralOracle::overlaps: dimension mismatch");
  }
  Vector coeffs = eigenvectors_.adjoint() * state.amplitudes;
  return coeffs.cwiseAbs2();
}

double SpectralOracle::expectation(const PureState& state) const {
  Eigen::VectorXd w = overlaps(state);
  return w.dot(eigenvalues_);
}

double SpectralOracle::sine_expectation(const PureState& state, double tau) const {
  Eigen::VectorXd w = overlaps(state);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    acc += w[i] * std::sin(tau * eigenvalues_[i]);
  }
  return acc;
}

Matrix SpectralOracle::evolution(double tau) const {
  Vector phases(eigenvalues_.size());
  for (Eigen::Index i = 0; i < eigenvalues_.size(); ++i) {
    phases[i] = std::exp(cplx(0.0, tau * eigenvalues_[i]));
  }
  return eigenvectors_ * phases.asDiagonal() * eigenvectors_.adjoint();
}

MomentTable SpectralOracle::moments(const PureState& state, std::size_t max_k) const {
  Eigen::VectorXd w = overlaps(state);
  MomentTable table;
  table.odd.resize(max_k + 1, 0.0);
  table.even_moments.resize(max_k + 1, 0.0);
  table.even_moments[0] = 1.0;
  // Accumulate powers eigenvalue by eigenvalue; exact up to fp rounding.
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    const double lam = eigenvalues_[i];
    double odd_pow = lam;  // lam^(2k+1), starting k = 0
    for (std::size_t k = 0; k <= max_k; ++k) {
      table.odd[k] += w[i] * odd_pow;
      odd_pow *= lam * lam;
    }
    double even_pow = lam * lam;  // lam^(2k), starting k = 1
    for (std::size_t k = 1; k <= max_k; ++k) {
      table.even_moments[k] += w[i] * even_pow;
      even_pow *= lam * lam;
    }
  }
  table.mean = table.odd[0];
  if (max_k >= 1) {
    table.second = table.even_moments[1];
  } else {
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      table.second += w[i] * eigenvalues_[i] * eigenvalues_[i];
    }
  }
  table.variance = table.second - table.mean * table.mean;
  return table;
}

RatioR ratio_R(const ObservableExpansion& obs, const PureState& state) {
  const Norms norms = obs.one_norms();
  if (norms.traceless_one <= 0.0) {
    throw std::invalid_argument("ratio_R: observable has no traceless part");
  }
  SpectralOracle oracle(obs);
  RatioR out;
  out.value = std::abs(oracle.expectation(state)) / norms.traceless_one;
  out.maximum = norms.full_one / norms.traceless_one;
  return out;
}

}  // namespace qestim
