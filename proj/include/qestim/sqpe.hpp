#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "qestim/oa.hpp"
#include "qestim/pauli.hpp"
#include "qestim/rng.hpp"
#include "qestim/shots.hpp"
#include "qestim/spectral.hpp"

namespace qestim {

// ---------------------------------------------------------------------------
// Single-time-step planning (order K series estimator)
// ---------------------------------------------------------------------------

/// Shot prefactor f(K) = ((2K+1)/(2K)) * (sqrt(2K+1)/(2K+1)!)^(1/K).
/// f(1) = sqrt(3)/4.
double shot_prefactor(std::size_t order);

/// Time-step prefactor gamma(K) = ((2K+1)!/(2 sqrt(2K+1)))^(1/(2K));
/// the optimal step is gamma(K) * (2 eps / |m_K|)^(1/(2K)).
double tau_prefactor(std::size_t order);

/// Series truncation bound tau^(2K) |m_K| / (2K+1)!.
double truncation_bound(std::size_t order, double tau, double m_K);

struct SqpePlan {
  std::size_t order = 1;
  double tau_opt = 0.0;
  double f_K = 0.0;
  double predicted_shots = 0.0;     // f(K) |m_K|^(1/K) / eps^(2+1/K)
  double bias_bound_at_tau = 0.0;   // truncation bound evaluated at tau_opt
};

/// Optimal single-step plan for order K, target additive error eps, and the
/// (2K+1)-th moment m_K of the prepared state (or an upper bound on it).
SqpePlan plan_single_tau(std::size_t order, double target_eps, double m_K);

/// Order-K series estimator: combines the measured ancilla mean
/// z = <Z_a> = -<sin(tau O)> with known lower odd moments m_1..m_{K-1}:
///   O_K = -(1/tau) (z + sum_{k=1}^{K-1} tau^(2k+1) (-1)^k m_k / (2k+1)!).
/// known_odd_moments holds m_1..m_{K-1} in order; empty means K = 1.
double estimator_K(double tau, double z_mean, const std::vector<double>& known_odd_moments);

// ---------------------------------------------------------------------------
// Linear (K = 1) adaptive run
// ---------------------------------------------------------------------------

struct LinearCurvePoint {
  std::uint64_t cumulative_shots = 0;
  double estimate = 0.0;
  double claimed_rmse = 0.0;  // sqrt(claimed variance + bias bound^2)
};

struct LinearRunResult {
  EstimateReport report;
  std::vector<LinearCurvePoint> curve;
};

/// Accumulates ancilla shots at fixed tau until claimed variance plus the
/// squared bias bound drops below target_eps^2. m1_bound is |<O^3>| or an
/// upper bound on it. Throws std::invalid_argument when the bias bound alone
/// already exceeds the target (tau too large), std::runtime_error when the
/// cap is hit first.
LinearRunResult linear_run(const ObservableExpansion& obs, const PureState& state, double tau,
                           double target_eps, double m1_bound, std::uint64_t shot_cap,
                           RngStream& rng, const ReadoutNoise& noise = {});

// ---------------------------------------------------------------------------
// Cubic (K = 2) maximum-likelihood machinery
// ---------------------------------------------------------------------------

/// Two evolution times for the cubic protocol; tau_a < tau_b by convention.
struct TimeStepPair {
  double tau_a = 0.0;
  double tau_b = 0.0;
};

/// Ancilla-0 probability of the cubic model: (1 - tau mu + tau^3 eta / 6)/2.
double model_probability(double tau, double mu, double eta);

struct MleEstimate {
  double mu = 0.0;
  double eta = 0.0;
  double var_mu = 0.0;   // inverse-Fisher variance, posterior-mean smoothed
  double var_eta = 0.0;
  double bias_bound = 0.0;
  std::uint64_t blocks_used = 0;
  std::uint64_t block_size = 0;
};

/// Closed-form maximum-likelihood (mu, eta) from one batch per time step.
/// Point estimates use the raw frequencies; the variance fields use
/// posterior-mean probabilities so they stay positive on extreme tallies.
MleEstimate mle_pair(const ShotBatch& batch_a, const ShotBatch& batch_b, const TimeStepPair& pair);

/// Same inversion from exact ancilla-0 probabilities (variance fields zero).
MleEstimate mle_from_probabilities(double prob_a, double prob_b, const TimeStepPair& pair);

/// Binomial log-likelihood of (mu, eta) given tallies at the two steps.
double pair_log_likelihood(double mu, double eta, const TimeStepPair& pair, std::uint64_t x_a,
                           std::uint64_t m_a, std::uint64_t x_b, std::uint64_t m_b);

/// Analytic gradient of pair_log_likelihood in (mu, eta).
std::pair<double, double> pair_score(double mu, double eta, const TimeStepPair& pair,
                                     std::uint64_t x_a, std::uint64_t m_a, std::uint64_t x_b,
                                     std::uint64_t m_b);

struct BiasBounds {
  double ansatz = 0.0;     // |mu eta|/120 * ta^2 tb^2 (ta^2 + tb^2) / |ta^2 - tb^2|
  double tightened = 0.0;  // same with (ta^2 + tb^2) -> max(ta^2, tb^2)
};

/// Data-driven bias bounds for the cubic estimator; tightened <= ansatz.
BiasBounds bias_estimators(const MleEstimate& estimate, const TimeStepPair& pair);

/// Fifth-moment form of the cubic bias bound:
/// |B| <= |<O^5>|/120 * ta^2 tb^2 (ta^2 + tb^2)/|ta^2 - tb^2|.
double cubic_bias_bound(double fifth_moment_mag, const TimeStepPair& pair);

/// Exact cubic-estimator bias: mu from the exact sine expectations minus <O>.
double exact_bias(const SpectralOracle& oracle, const PureState& state, const TimeStepPair& pair);

// ---------------------------------------------------------------------------
// Optimal-design loop
// ---------------------------------------------------------------------------

enum class BiasMode { A1, A2, Exact };

struct DesignDomain {
  double tau_min = 1e-4;
  double tau_cap = 0.5;
  std::size_t grid = 64;  // grid x grid log-spaced candidates
};

/// Picks the next time-step pair by minimizing the per-block design cost
///   predicted Var[mu] + (block_index + 1) * bias_bound^2
/// over a log grid with tau_a < tau_b, then refines by coordinate descent.
/// Predicted probabilities come from the current (mu, eta); candidates whose
/// model probability leaves [0, 1] are infeasible. BiasMode::Exact requires
/// oracle and state.
TimeStepPair design_next_pair(const MleEstimate& current, std::uint64_t block_index,
                              std::uint64_t shots_per_tau, BiasMode mode,
                              const DesignDomain& domain, const SpectralOracle* oracle = nullptr,
                              const PureState* state = nullptr);

// ---------------------------------------------------------------------------
// Cubic adaptive run
// ---------------------------------------------------------------------------

struct CubicTraceRow {
  std::uint64_t block = 0;
  double tau_a = 0.0;
  double tau_b = 0.0;
  std::uint64_t x_a = 0;
  std::uint64_t x_b = 0;
  double mu = 0.0;    // pooled estimate after this block
  double eta = 0.0;   // pooled estimate after this block
  double var_mu = 0.0;  // this block's inverse-Fisher variance
  double bias_a1 = 0.0;
  double bias_a2 = 0.0;
  std::optional<double> bias_exact;
  double mse = 0.0;   // pooled claimed variance + pooled bias^2
  std::uint64_t cumulative_shots = 0;
};

struct CubicOptions {
  double target_eps = 0.0;
  std::uint64_t block_size = 40;  // shots per block, split evenly over the pair
  BiasMode bias_mode = BiasMode::A1;
  std::uint64_t shot_cap = 10000000;
  DesignDomain domain;
  bool emit_exact_bias = false;  // record the oracle bias alongside each block
};

struct CubicRunResult {
  EstimateReport report;  // value/variance/bias_bound of the pooled estimate
  double eta = 0.0;       // pooled third-moment estimate
  double fisher_variance = 0.0;  // pooled variance from the measured per-block Fisher variances
  double fisher_variance_eta = 0.0;
  std::vector<CubicTraceRow> trace;
};

/// Adaptive cubic protocol. Blocks of block_size shots are measured at the
/// current pair, combined by closed-form MLE, pooled across blocks with
/// inverse-variance weights, and the next pair is chosen by design_next_pair
/// under a data-driven time-step cap. Stops when pooled claimed MSE reaches
/// target_eps^2; throws std::runtime_error at the shot cap.
CubicRunResult cubic_run(const ObservableExpansion& obs, const PureState& state,
                         const CubicOptions& options, RngStream& rng,
                         const ReadoutNoise& noise = {});

}  // namespace qestim
