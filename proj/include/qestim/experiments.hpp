#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qestim/oa.hpp"
#include "qestim/pauli.hpp"

namespace qestim {

/// Raised on malformed or inconsistent experiment configs; the CLI maps it
/// to exit code 2. The message names the offending field.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class ExperimentKind {
  OaCurve,
  SqpeLinear,
  SqpeCubic,
  ConditionsFig1,
  ConditionsFig8,
  NoiseBudget,
  ReadoutDemo,
  TrotterScan,
  VqeDemo,
  ChannelPtm,
};

ExperimentKind experiment_from_name(const std::string& name);
std::string experiment_name(ExperimentKind kind);

/// Parsed experiment description. Schema (version 1):
///   {
///     "schema": 1,
///     "experiment": "<name>",
///     "observable": "deuteron" | {"identity_coeff": ..., "terms": [...]},
///     "state": "ground" | {"angle": radians} | {"amplitudes": [[re, im], ...]},
///     "seeds": [uint64, ...],
///     "params": { experiment-specific knobs, all optional }
///   }
/// Energies are MeV for the deuteron observable; angles are radians.
struct ExperimentConfig {
  int schema_version = 1;
  ExperimentKind experiment = ExperimentKind::OaCurve;
  ObservableExpansion observable;
  bool observable_is_deuteron = false;

  enum class StateKind { Ground, Angle, Amplitudes };
  StateKind state_kind = StateKind::Ground;
  double state_angle = 0.0;
  Vector state_amplitudes;

  std::vector<std::uint64_t> seeds;
  nlohmann::json params = nlohmann::json::object();

  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig from_text(const std::string& text);
  static ExperimentConfig from_file(const std::string& path);

  /// Ground states come from the exact eigendecomposition; angle states are
  /// R_y(theta)|0> on one qubit.
  PureState resolve_state() const;
};

/// In-memory experiment artifacts: CSV files keyed by name plus a JSON
/// summary holding each targeted landmark with its measured value and
/// pass/fail verdict.
struct ExperimentOutput {
  std::map<std::string, std::string> files;
  nlohmann::json summary;
  bool passed = true;
};

/// Runs one experiment. Per-seed work fans out to a worker pool (size from
/// QESTIM_WORKERS, default hardware concurrency); results merge in seed
/// order, so outputs are independent of scheduling.
ExperimentOutput run_experiment(const ExperimentConfig& config);

/// Writes files plus summary.json under out_dir (created if needed).
void write_outputs(const ExperimentOutput& output, const std::string& out_dir);

/// Shortest round-trip decimal rendering used by every CSV writer.
std::string csv_number(double value);

unsigned worker_count();

// ---------------------------------------------------------------------------
// Single-parameter variational demo (R_y ansatz)
// ---------------------------------------------------------------------------

/// R_y(theta)|0> = (cos(theta/2), sin(theta/2)).
PureState ry_state(double theta);

/// Exact minimizer of theta -> <R_y(theta) 0| obs |R_y(theta) 0> by dense
/// scan plus golden-section refinement.
double ry_energy_minimum(const ObservableExpansion& obs);

struct VqePoint {
  std::uint64_t iteration = 0;
  double theta = 0.0;
  double energy = 0.0;  // sampled energy of the current best vertex
};

struct VqeResult {
  std::vector<VqePoint> trace;
  double final_theta = 0.0;
  /// First iteration whose best vertex is within rel_tol of the reference
  /// minimizer; trace.size() + 1 when never reached.
  std::uint64_t first_hit = 0;
  bool converged = false;
};

/// Nelder-Mead on the single angle, two-point simplex seeded at the interior
/// golden-section points of [0, pi]. Every energy evaluation spends
/// shots_per_eval shots through term-by-term averaging on a fresh child
/// stream of `seed`.
VqeResult vqe_demo(const ObservableExpansion& obs, std::uint64_t shots_per_eval,
                   std::uint64_t seed, std::uint64_t max_iterations, double reference_theta,
                   double rel_tol = 0.05);

}  // namespace qestim
