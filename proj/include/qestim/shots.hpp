#pragma once

#include <cstdint>
#include <optional>

#include "qestim/pauli.hpp"
#include "qestim/rng.hpp"
#include "qestim/spectral.hpp"

namespace qestim {

/// Symmetric readout bit-flip. `flip_probability` is what the simulated
/// hardware does; `estimated` is the calibration value handed to estimators
/// (absent means no mitigation is possible).
struct ReadoutNoise {
  double flip_probability = 0.0;
  std::optional<double> estimated;

  bool active() const { return flip_probability > 0.0; }
};

/// Tally of a repeated two-outcome (+1/-1) measurement.
struct ShotBatch {
  std::uint64_t shots = 0;
  std::uint64_t plus_count = 0;

  /// Sample mean of the +1/-1 outcomes, in [-1, 1].
  double mean() const;
};

/// `shots` measurements of a +1/-1 observable with true expectation
/// `expectation`; readout flips each recorded outcome with probability p.
ShotBatch sample_two_outcome(double expectation, std::uint64_t shots, RngStream& rng,
                             const ReadoutNoise& noise = {});

/// Projective measurement of a single Pauli string on `state`.
ShotBatch sample_pauli(const PauliString& string, const PureState& state, std::uint64_t shots,
                       RngStream& rng, const ReadoutNoise& noise = {});

/// Ancilla-Z statistics of the phase-kickback circuit for exp(i tau O):
/// <Z_a> = -<sin(tau O)>, so P(outcome +1) = (1 - <sin(tau O)>)/2.
ShotBatch sample_ancilla_z(const SpectralOracle& oracle, const PureState& state, double tau,
                           std::uint64_t shots, RngStream& rng, const ReadoutNoise& noise = {});

/// Same circuit with an explicit unitary standing in for exp(i tau O)
/// (e.g. a product-formula approximation): <Z_a> = -Im <state|W|state>.
ShotBatch sample_ancilla_z(const Matrix& unitary, const PureState& state, std::uint64_t shots,
                           RngStream& rng, const ReadoutNoise& noise = {});

/// Flip-probability estimate from `calibration_shots` preparations of a
/// known basis state.
double calibrate_flip_probability(double true_p, std::uint64_t calibration_shots, RngStream& rng);

/// Posterior-mean probability (X+1)/(M+2); never exactly 0 or 1, which keeps
/// downstream arcsine/log expressions finite.
double bayes_probability(std::uint64_t successes, std::uint64_t shots);

}  // namespace qestim
