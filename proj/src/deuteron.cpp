#include "qestim/deuteron.hpp"

#include <numbers>

namespace qestim {

ObservableExpansion deuteron_hamiltonian() {
  ObservableExpansion obs;
  obs.identity_coeff = 87.5;
  obs.terms.push_back(PauliTerm{35.0, std::numbers::pi, PauliString("X")});
  obs.terms.push_back(PauliTerm{82.5, 0.0, PauliString("Z")});
  obs.validate();
  return obs;
}

}  // namespace qestim
