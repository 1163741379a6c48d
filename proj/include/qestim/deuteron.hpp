#pragma once

#include "qestim/pauli.hpp"

namespace qestim {

/// One-qubit deuteron Hamiltonian in MeV:
///   H = 87.5*I - 35*X + 82.5*Z
/// delivered in weight/phase form (all weights nonnegative, phases in {0, pi}).
ObservableExpansion deuteron_hamiltonian();

/// Ground-state energy of the deuteron Hamiltonian, MeV.
constexpr double kDeuteronGroundEnergy = -2.1172416446746034;

}  // namespace qestim
