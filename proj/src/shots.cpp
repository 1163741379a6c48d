#include "qestim/shots.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qestim {

double ShotBatch::mean() const {
  if (shots == 0) throw std::logic_error("ShotBatch::mean: empty batch");
  const double m = static_cast<double>(shots);
  return (2.0 * static_cast<double>(plus_count) - m) / m;
}

ShotBatch sample_two_outcome(double expectation, std::uint64_t shots, RngStream& rng,
                             const ReadoutNoise& noise) {
  if (!(expectation >= -1.0 - 1e-12 && expectation <= 1.0 + 1e-12)) {
    throw std::invalid_argument("sample_two_outcome: expectation outside [-1, 1]");
  }
  const double p = noise.flip_probability;
  if (!(p >= 0.0 && p <= 0.5)) {
    throw std::invalid_argument("sample_two_outcome: flip probability outside [0, 0.5]");
  }
  double q = 0.5 * (1.0 + std::clamp(expectation, -1.0, 1.0));
  // Recorded-outcome distribution under a symmetric bit-flip channel.
  q = (1.0 - p) * q + p * (1.0 - q);
  ShotBatch batch;
  batch.shots = shots;
  batch.plus_count = rng.binomial(shots, q);
  return batch;
}

ShotBatch sample_pauli(const PauliString& string, const PureState& state, std::uint64_t shots,
                       RngStream& rng, const ReadoutNoise& noise) {
  return sample_two_outcome(string.expectation(state.amplitudes), shots, rng, noise);
}

ShotBatch sample_ancilla_z(const SpectralOracle& oracle, const PureState& state, double tau,
                           std::uint64_t shots, RngStream& rng, const ReadoutNoise& noise) {
  return sample_two_outcome(-oracle.sine_expectation(state, tau), shots, rng, noise);
}

ShotBatch sample_ancilla_z(const Matrix& unitary, const PureState& state, std::uint64_t shots,
                           RngStream& rng, const ReadoutNoise& noise) {
  if (unitary.rows() != state.amplitudes.size() || unitary.cols() != state.amplitudes.size()) {
    throw std::invalid_argument("sample_ancilla_z: unitary/state dimension mismatch");
  }
  const cplx amp = state.amplitudes.dot(unitary * state.amplitudes);
  return sample_two_outcome(-amp.imag(), shots, rng, noise);
}

double calibrate_flip_probability(double true_p, std::uint64_t calibration_shots, RngStream& rng) {
  if (calibration_shots == 0) {
    throw std::invalid_argument("calibrate_flip_probability: need at least one shot");
  }
  if (!(true_p >= 0.0 && true_p <= 0.5)) {
    throw std::invalid_argument("calibrate_flip_probability: p outside [0, 0.5]");
  }
  const std::uint64_t flips = rng.binomial(calibration_shots, true_p);
  return static_cast<double>(flips) / static_cast<double>(calibration_shots);
}

double bayes_probability(std::uint64_t successes, std::uint64_t shots) {
  if (successes > shots) throw std::invalid_argument("bayes_probability: successes > shots");
  return (static_cast<double>(successes) + 1.0) / (static_cast<double>(shots) + 2.0);
}

}  // namespace qestim
