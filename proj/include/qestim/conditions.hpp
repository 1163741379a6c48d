#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace qestim {

/// Inputs for the measurement-advantage conditions at order K. Moments refer
/// to the prepared state, norms to the Pauli expansion of the observable.
struct ConditionInput {
  std::size_t order = 1;  // K
  double eps_r = 0.0;     // target relative error
  double mean_abs = 0.0;  // |<O>|
  double variance = 0.0;  // Var[O]
  double even_moment = 0.0;  // <O^{2K}>
  double traceless_one_norm = 0.0;
  double full_one_norm = 0.0;

  /// R = |<O>| / ||O_T||_1.
  double ratio() const;
};

/// Exact advantage condition (boundary inclusive):
/// R >= (f(K)^K / eps_r) |<O^{2K+1}>| / ||O_T||_1^{2K+1}.
bool condition_exact(const ConditionInput& input, double odd_moment_2k1);

/// Sufficient condition via a moment-ratio bound
/// Gamma_K >= |<O^{2K+1}>| / ||O||_1^{2K+1}:
/// R >= (f(K)^K / eps_r) Gamma_K (1 + |alpha0| / ||O_T||_1)^{2K+1}.
bool condition_gamma(double ratio, double eps_r, std::size_t order, double gamma_k, double alpha0,
                     double traceless_one_norm);

/// Eigenstate condition: |lambda|/||O_T||_1 <= eps_r^(1/(2K)) / sqrt(f(K)).
bool condition_eigen(double lambda_ratio, double eps_r, std::size_t order);

/// The two practically checkable sufficient conditions.
struct LooseVerdict {
  /// Covariance term bounded through the Lipschitz/Jensen chain:
  /// numerator <O^{2K}>|<O>| + ||O||_1^{2K-1} Var[O].
  bool covariance_bound = false;
  /// Norm-only numerator ||O||_1^{2K+1} (1 + Var[O]/||O||_1^2); weakest.
  bool norm_bound = false;
};
LooseVerdict condition_loose(const ConditionInput& input);

/// Even-moment bound from an infidelity bound delta on the prepared state
/// relative to an eigenstate with eigenvalue lambda_phi:
/// <O^{2K}> <= lambda_phi^{2K} + delta ||O||_1^{2K}.
double even_moment_fidelity_bound(double lambda_phi, double delta, double full_one_norm,
                                  std::size_t order);

/// One row of an advantage-region boundary table (y_boundary is the smallest
/// admissible eps_r at abscissa x for the given order).
struct RegionRow {
  std::string mode;
  std::size_t order = 0;
  double x = 0.0;
  double y_boundary = 0.0;
};

enum class RegionMode {
  EigenRatio,      // x = eigenvalue ratio, boundary from the eigenstate condition
  VarianceBudget,  // x = Var[O], boundaries from both loose conditions
};

struct RegionScanSettings {
  std::size_t grid = 64;  // >= 16
  std::vector<std::size_t> orders = {1, 2, 3, 4, 5, 6, 7, 8};
  double x_min = 0.0;  // zero: mode default
  double x_max = 0.0;
  // VarianceBudget fixes the observable scales and the state mean:
  double mean_abs = 0.0;
  double traceless_one_norm = 0.0;
  double full_one_norm = 0.0;
};

/// EigenRatio rows carry mode "eigen_ratio" with boundary (x sqrt(f(K)))^{2K}.
/// VarianceBudget emits two rows per point, modes "variance_covariance" and
/// "variance_norm"; the even moment is modelled as ||O||_1^{2K-2}(mean^2 + x),
/// exact at K = 1.
std::vector<RegionRow> region_scan(RegionMode mode, const RegionScanSettings& settings);

}  // namespace qestim
