// Config-driven experiment runner. Exit codes: 0 all landmark checks pass,
// 1 a landmark check failed, 2 bad config or usage.
#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "qestim/deuteron.hpp"
#include "qestim/experiments.hpp"
#include "qestim/oa.hpp"
#include "qestim/spectral.hpp"

namespace {

int run_config(const std::string& config_path, std::int64_t seed_override,
               std::string out_dir) {
  qestim::ExperimentConfig config;
  try {
    config = qestim::ExperimentConfig::from_file(config_path);
    if (seed_override >= 0)
      config.seeds = {static_cast<std::uint64_t>(seed_override)};
  } catch (const qestim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  if (out_dir.empty()) out_dir = "out/" + qestim::experiment_name(config.experiment);
  try {
    const qestim::ExperimentOutput output = qestim::run_experiment(config);
    qestim::write_outputs(output, out_dir);
    std::cout << output.summary.dump(2) << "\n";
    std::cerr << "wrote " << output.files.size() + 1 << " files to " << out_dir << "\n";
    return output.passed ? 0 : 1;
  } catch (const qestim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "experiment failed: " << e.what() << "\n";
    return 1;
  }
}

int deuteron_summary() {
  using namespace qestim;
  const ObservableExpansion h = deuteron_hamiltonian();
  const SpectralOracle oracle(h);
  const PureState ground = oracle.ground_state();
  const Norms norms = h.one_norms();
  const RatioR ratio = ratio_R(h, ground);
  const double eps_r = 0.01;
  const double eps_abs = eps_r * std::abs(oracle.lambda_min());

  nlohmann::json summary;
  summary["hamiltonian_mev"] = nlohmann::json::parse(h.to_json());
  summary["ground_energy_mev"] = oracle.lambda_min();
  summary["excited_energy_mev"] = oracle.lambda_max();
  summary["trace_mev"] = oracle.lambda_min() + oracle.lambda_max();
  summary["traceless_one_norm"] = norms.traceless_one;
  summary["full_one_norm"] = norms.full_one;
  summary["two_norm_squared"] = norms.two * norms.two;
  summary["ratio_R"] = ratio.value;
  summary["worst_case_budget_at_1pct"] = budget_relative(h, ground, eps_r);
  summary["uniform_budget_at_1pct"] = budget_uniform(h, ground, eps_abs).exact;
  summary["proportional_budget_at_1pct"] = budget_proportional(h, ground, eps_abs);
  std::cout << summary.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shot-budget and phase-estimation experiment runner"};
  app.require_subcommand(1);

  std::string config_path;
  std::int64_t seed_override = -1;
  std::string out_dir;
  CLI::App* run = app.add_subcommand("run", "Run one experiment from a JSON config");
  run->add_option("--config", config_path, "Path to the experiment config")->required();
  run->add_option("--seed-override", seed_override, "Replace the config's seed list with one seed");
  run->add_option("--out", out_dir, "Output directory (default out/<experiment>)");

  bool want_summary = false;
  CLI::App* deuteron = app.add_subcommand("deuteron", "Built-in deuteron benchmark numbers");
  deuteron->add_flag("--summary", want_summary, "Print the reference summary as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (run->parsed()) return run_config(config_path, seed_override, out_dir);
  if (deuteron->parsed()) return deuteron_summary();
  return 2;
}
