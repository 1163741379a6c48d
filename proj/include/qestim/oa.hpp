#pragma once

#include <cstdint>
#include <vector>

#include "qestim/pauli.hpp"
#include "qestim/rng.hpp"
#include "qestim/shots.hpp"

namespace qestim {

enum class AllocationMode { Uniform, Proportional };

/// Per-term shot counts for a term-by-term averaging run.
struct OAllocation {
  std::vector<std::uint64_t> per_term;

  std::uint64_t total() const;
};

/// Splits a shot budget across the expansion terms. Uniform gives every term
/// ceil(total/L); proportional gives term k ceil(total * w_k / ||O_T||_1).
/// Counts round up and every term gets at least one shot, so total() can
/// slightly exceed the request.
OAllocation allocate_shots(const ObservableExpansion& obs, std::uint64_t total_shots,
                           AllocationMode mode);

/// Estimate with its accounted uncertainty: `variance` is the claimed
/// statistical variance, `bias_bound` an upper bound on systematic bias,
/// and mse = variance + bias_bound^2.
struct EstimateReport {
  double value = 0.0;
  double variance = 0.0;
  double bias_bound = 0.0;
  double mse = 0.0;
  std::uint64_t total_shots = 0;
};

/// Term-by-term estimate of <O>: each Pauli expectation is sampled on its
/// own, then recombined classically with the expansion weights. When noise
/// carries a calibration estimate, each term mean is divided by (1 - 2 p_hat).
/// The claimed per-term variance uses the posterior-mean outcome probability,
/// so it never degenerates to zero on extreme tallies.
EstimateReport oa_estimate(const ObservableExpansion& obs, const PureState& state,
                           const OAllocation& allocation, RngStream& rng,
                           const ReadoutNoise& noise = {});

/// sum_k w_k^2 (1 - <P_k>^2), the state-dependent single-shot variance factor
/// of the recombined estimator.
double variance_factor(const ObservableExpansion& obs, const PureState& state);

struct UniformBudget {
  double exact = 0.0;  // (L / eps^2) * variance_factor
  double bound = 0.0;  // L * ||O_T||_2^2 / eps^2
};

/// Shots needed for additive rms error eps under uniform allocation.
UniformBudget budget_uniform(const ObservableExpansion& obs, const PureState& state, double eps);

/// Shots needed under weight-proportional allocation:
/// (||O_T||_1 / eps^2) * sum_k w_k (1 - <P_k>^2).
double budget_proportional(const ObservableExpansion& obs, const PureState& state, double eps);

/// State-independent worst case ||O_T||_1^2 / eps^2.
double budget_worst_case(const ObservableExpansion& obs, double eps);

/// Budget for relative error eps_r on <O>: 1 / (eps_r * R)^2 where
/// R = |<O>| / ||O_T||_1.
double budget_relative(const ObservableExpansion& obs, const PureState& state, double eps_r);

/// Predicted rms error after total_shots: sqrt((L/N) * variance_factor) for
/// uniform, sqrt((||O_T||_1/N) * sum w_k(1-<P_k>^2)) for proportional.
double predicted_error(const ObservableExpansion& obs, const PureState& state,
                       std::uint64_t total_shots, AllocationMode mode);

/// One point of an error-vs-shots sweep.
struct ErrorCurvePoint {
  std::uint64_t total_shots = 0;
  double analytic_eps = 0.0;
  double empirical_abs_err = 0.0;
  std::uint64_t seed = 0;
};

/// Samples a geometric shot schedule from n_min to n_max (ratio `factor`).
/// Each point uses an independent child stream of `seed`.
std::vector<ErrorCurvePoint> error_curve(const ObservableExpansion& obs, const PureState& state,
                                         std::uint64_t n_min, std::uint64_t n_max, double factor,
                                         std::uint64_t seed,
                                         AllocationMode mode = AllocationMode::Uniform);

}  // namespace qestim
