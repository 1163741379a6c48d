#include "qestim/oa.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace qestim {

std::uint64_t OAllocation::total() const {
  return std::accumulate(per_term.begin(), per_term.end(), std::uint64_t{0});
}

OAllocation allocate_shots(const ObservableExpansion& obs, std::uint64_t total_shots,
                           AllocationMode mode) {
  const std::size_t L = obs.term_count();
  OAllocation alloc;
  alloc.per_term.resize(L, 0);
  if (L == 0) return alloc;
  if (total_shots == 0) throw std::invalid_argument("allocate_shots: zero budget");

  if (mode == AllocationMode::Uniform) {
    const std::uint64_t per = (total_shots + L - 1) / L;
    for (auto& m : alloc.per_term) m = per;
    return alloc;
  }

  const double one_norm = obs.one_norms().traceless_one;
  if (one_norm <= 0.0) throw std::invalid_argument("allocate_shots: all weights are zero");
  for (std::size_t k = 0; k < L; ++k) {
    const double share = static_cast<double>(total_shots) * obs.terms[k].weight / one_norm;
    alloc.per_term[k] = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(share)));
  }
  return alloc;
}

EstimateReport oa_estimate(const ObservableExpansion& obs, const PureState& state,
                           const OAllocation& allocation, RngStream& rng,
                           const ReadoutNoise& noise) {
  if (allocation.per_term.size() != obs.term_count()) {
    throw std::invalid_argument("oa_estimate: allocation size mismatch");
  }
  double scale = 1.0;
  if (noise.active() && noise.estimated) {
    const double p_hat = *noise.estimated;
    if (!(p_hat >= 0.0 && p_hat < 0.5)) {
      throw std::invalid_argument("oa_estimate: calibration estimate outside [0, 0.5)");
    }
    scale = 1.0 / (1.0 - 2.0 * p_hat);
  }

  EstimateReport report;
  report.value = obs.identity_coeff;
  for (std::size_t k = 0; k < obs.term_count(); ++k) {
    const std::uint64_t shots = allocation.per_term[k];
    if (shots == 0) throw std::invalid_argument("oa_estimate: zero shots for a term");
    const ShotBatch batch = sample_pauli(obs.terms[k].string, state, shots, rng, noise);
    const double coeff = obs.terms[k].coefficient().real();
    report.value += coeff * scale * batch.mean();
    const double q = bayes_probability(batch.plus_count, batch.shots);
    report.variance +=
        coeff * coeff * scale * scale * 4.0 * q * (1.0 - q) / static_cast<double>(shots);
    report.total_shots += shots;
  }
  report.mse = report.variance + report.bias_bound * report.bias_bound;
  return report;
}

double variance_factor(const ObservableExpansion& obs, const PureState& state) {
  double acc = 0.0;
  for (const auto& t : obs.terms) {
    const double e = t.string.expectation(state.amplitudes);
    acc += t.weight * t.weight * (1.0 - e * e);
  }
  return acc;
}

UniformBudget budget_uniform(const ObservableExpansion& obs, const PureState& state, double eps) {
  if (eps <= 0.0) throw std::invalid_argument("budget_uniform: eps must be positive");
  const double L = static_cast<double>(obs.term_count());
  UniformBudget b;
  b.exact = L * variance_factor(obs, state) / (eps * eps);
  const double two = obs.one_norms().two;
  b.bound = L * two * two / (eps * eps);
  return b;
}

double budget_proportional(const ObservableExpansion& obs, const PureState& state, double eps) {
  if (eps <= 0.0) throw std::invalid_argument("budget_proportional: eps must be positive");
  double acc = 0.0;
  for (const auto& t : obs.terms) {
    const double e = t.string.expectation(state.amplitudes);
    acc += t.weight * (1.0 - e * e);
  }
  return obs.one_norms().traceless_one * acc / (eps * eps);
}

double budget_worst_case(const ObservableExpansion& obs, double eps) {
  if (eps <= 0.0) throw std::invalid_argument("budget_worst_case: eps must be positive");
  const double one = obs.one_norms().traceless_one;
  return one * one / (eps * eps);
}

double budget_relative(const ObservableExpansion& obs, const PureState& state, double eps_r) {
  if (eps_r <= 0.0) throw std::invalid_argument("budget_relative: eps_r must be positive");
  const double mean = obs.expectation(state.amplitudes);
  if (mean == 0.0) throw std::invalid_argument("budget_relative: expectation is zero");
  const double R = std::abs(mean) / obs.one_norms().traceless_one;
  return 1.0 / (eps_r * eps_r * R * R);
}

double predicted_error(const ObservableExpansion& obs, const PureState& state,
                       std::uint64_t total_shots, AllocationMode mode) {
  if (total_shots == 0) throw std::invalid_argument("predicted_error: zero shots");
  const double n = static_cast<double>(total_shots);
  if (mode == AllocationMode::Uniform) {
    const double L = static_cast<double>(obs.term_count());
    return std::sqrt(L * variance_factor(obs, state) / n);
  }
  double acc = 0.0;
  for (const auto& t : obs.terms) {
    const double e = t.string.expectation(state.amplitudes);
    acc += t.weight * (1.0 - e * e);
  }
  return std::sqrt(obs.one_norms().traceless_one * acc / n);
}

std::vector<ErrorCurvePoint> error_curve(const ObservableExpansion& obs, const PureState& state,
                                         std::uint64_t n_min, std::uint64_t n_max, double factor,
                                         std::uint64_t seed, AllocationMode mode) {
  if (n_min == 0 || n_max < n_min) throw std::invalid_argument("error_curve: bad shot range");
  if (!(factor > 1.0)) throw std::invalid_argument("error_curve: factor must exceed 1");
  const double truth = obs.expectation(state.amplitudes);

  std::vector<ErrorCurvePoint> points;
  std::uint64_t n = n_min;
  std::uint64_t index = 0;
  while (n <= n_max) {
    RngStream rng = RngStream::child(seed, index);
    const OAllocation alloc = allocate_shots(obs, n, mode);
    const EstimateReport report = oa_estimate(obs, state, alloc, rng);

    ErrorCurvePoint pt;
    pt.total_shots = alloc.total();
    pt.analytic_eps = predicted_error(obs, state, alloc.total(), mode);
    pt.empirical_abs_err = std::abs(report.value - truth);
    pt.seed = seed;
    points.push_back(pt);

    const auto next = static_cast<std::uint64_t>(std::ceil(static_cast<double>(n) * factor));
    n = std::max(n + 1, next);
    ++index;
  }
  return points;
}

}  // namespace qestim
