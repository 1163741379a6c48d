#include "qestim/sqpe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace qestim {

namespace {

constexpr double kInfeasibleCost = 1e30;

double factorial(std::size_t n) {
  double f = 1.0;
  for (std::size_t i = 2; i <= n; ++i) f *= static_cast<double>(i);
  return f;
}

double mitigation_scale(const ReadoutNoise& noise) {
  if (!(noise.active() && noise.estimated)) return 1.0;
  const double p_hat = *noise.estimated;
  if (!(p_hat >= 0.0 && p_hat < 0.5)) {
    throw std::invalid_argument("readout mitigation: estimate outside [0, 0.5)");
  }
  return 1.0 / (1.0 - 2.0 * p_hat);
}

}  // namespace

double shot_prefactor(std::size_t order) {
  if (order == 0) throw std::invalid_argument("shot_prefactor: order must be >= 1");
  const double K = static_cast<double>(order);
  const double base = std::sqrt(2.0 * K + 1.0) / factorial(2 * order + 1);
  return (2.0 * K + 1.0) / (2.0 * K) * std::pow(base, 1.0 / K);
}

double tau_prefactor(std::size_t order) {
  if (order == 0) throw std::invalid_argument("tau_prefactor: order must be >= 1");
  const double K = static_cast<double>(order);
  return std::pow(factorial(2 * order + 1) / (2.0 * std::sqrt(2.0 * K + 1.0)), 1.0 / (2.0 * K));
}

double truncation_bound(std::size_t order, double tau, double m_K) {
  if (order == 0) throw std::invalid_argument("truncation_bound: order must be >= 1");
  return std::pow(tau, 2.0 * static_cast<double>(order)) * std::abs(m_K) /
         factorial(2 * order + 1);
}

SqpePlan plan_single_tau(std::size_t order, double target_eps, double m_K) {
  if (order == 0) throw std::invalid_argument("plan_single_tau: order must be >= 1");
  if (!(target_eps > 0.0)) throw std::invalid_argument("plan_single_tau: eps must be positive");
  const double mag = std::abs(m_K);
  if (!(mag > 0.0)) throw std::invalid_argument("plan_single_tau: moment bound must be nonzero");
  const double K = static_cast<double>(order);
  SqpePlan plan;
  plan.order = order;
  plan.f_K = shot_prefactor(order);
  plan.tau_opt = tau_prefactor(order) * std::pow(2.0 * target_eps / mag, 1.0 / (2.0 * K));
  plan.predicted_shots = plan.f_K * std::pow(mag, 1.0 / K) / std::pow(target_eps, 2.0 + 1.0 / K);
  plan.bias_bound_at_tau = truncation_bound(order, plan.tau_opt, mag);
  return plan;
}

double estimator_K(double tau, double z_mean, const std::vector<double>& known_odd_moments) {
  if (tau == 0.0) throw std::invalid_argument("estimator_K: tau must be nonzero");
  double series = z_mean;
  double sign = -1.0;  // (-1)^k starting at k = 1
  for (std::size_t k = 1; k <= known_odd_moments.size(); ++k) {
    series += sign * std::pow(tau, 2.0 * static_cast<double>(k) + 1.0) *
              known_odd_moments[k - 1] / factorial(2 * k + 1);
    sign = -sign;
  }
  return -series / tau;
}

LinearRunResult linear_run(const ObservableExpansion& obs, const PureState& state, double tau,
                           double target_eps, double m1_bound, std::uint64_t shot_cap,
                           RngStream& rng, const ReadoutNoise& noise) {
  if (!(tau > 0.0)) throw std::invalid_argument("linear_run: tau must be positive");
  if (!(target_eps > 0.0)) throw std::invalid_argument("linear_run: eps must be positive");
  const double bias = truncation_bound(1, tau, m1_bound);
  if (bias >= target_eps) {
    throw std::invalid_argument("linear_run: bias bound exceeds target; reduce tau");
  }
  const double scale = mitigation_scale(noise);
  const SpectralOracle oracle(obs);

  LinearRunResult result;
  std::uint64_t shots = 0;
  std::uint64_t plus = 0;
  for (;;) {
    const std::uint64_t chunk = std::max<std::uint64_t>(
        64, static_cast<std::uint64_t>(std::ceil(static_cast<double>(shots) * 0.02)));
    const ShotBatch batch = sample_ancilla_z(oracle, state, tau, chunk, rng, noise);
    shots += batch.shots;
    plus += batch.plus_count;

    const double z = scale * (2.0 * static_cast<double>(plus) / static_cast<double>(shots) - 1.0);
    const double q = bayes_probability(plus, shots);
    const double variance =
        scale * scale * 4.0 * q * (1.0 - q) / (static_cast<double>(shots) * tau * tau);
    const double mse = variance + bias * bias;

    LinearCurvePoint point;
    point.cumulative_shots = shots;
    point.estimate = estimator_K(tau, z, {});
    point.claimed_rmse = std::sqrt(mse);
    result.curve.push_back(point);

    if (mse <= target_eps * target_eps) {
      result.report.value = point.estimate;
      result.report.variance = variance;
      result.report.bias_bound = bias;
      result.report.mse = mse;
      result.report.total_shots = shots;
      return result;
    }
    if (shots >= shot_cap) {
      throw std::runtime_error("linear_run: shot cap reached before target");
    }
  }
}

double model_probability(double tau, double mu, double eta) {
  return 0.5 * (1.0 - tau * mu + tau * tau * tau * eta / 6.0);
}

namespace {

void check_pair(const TimeStepPair& pair) {
  if (!(pair.tau_a > 0.0 && pair.tau_b > 0.0)) {
    throw std::invalid_argument("time-step pair: both steps must be positive");
  }
  if (pair.tau_a == pair.tau_b) {
    throw std::invalid_argument("time-step pair: steps must differ");
  }
}

// Shared inversion: one_minus_2p_t = 1 - 2 P_t for each step.
void invert_pair(double one_minus_2p_a, double one_minus_2p_b, const TimeStepPair& pair,
                 double* mu, double* eta) {
  const double ta = pair.tau_a;
  const double tb = pair.tau_b;
  const double c_mu = 1.0 / (ta * ta - tb * tb);
  const double c_eta = 6.0 / (ta * tb * (ta * ta - tb * tb));
  *mu = c_mu * ((ta * ta / tb) * one_minus_2p_b - (tb * tb / ta) * one_minus_2p_a);
  *eta = c_eta * (ta * one_minus_2p_b - tb * one_minus_2p_a);
}

}  // namespace

MleEstimate mle_pair(const ShotBatch& batch_a, const ShotBatch& batch_b,
                     const TimeStepPair& pair) {
  check_pair(pair);
  if (batch_a.shots == 0 || batch_b.shots == 0) {
    throw std::invalid_argument("mle_pair: both batches need shots");
  }
  const double freq_a = static_cast<double>(batch_a.plus_count) / static_cast<double>(batch_a.shots);
  const double freq_b = static_cast<double>(batch_b.plus_count) / static_cast<double>(batch_b.shots);

  MleEstimate est;
  invert_pair(1.0 - 2.0 * freq_a, 1.0 - 2.0 * freq_b, pair, &est.mu, &est.eta);

  const double ta = pair.tau_a;
  const double tb = pair.tau_b;
  const double pa = bayes_probability(batch_a.plus_count, batch_a.shots);
  const double pb = bayes_probability(batch_b.plus_count, batch_b.shots);
  const double sa = pa * (1.0 - pa) / static_cast<double>(batch_a.shots);
  const double sb = pb * (1.0 - pb) / static_cast<double>(batch_b.shots);
  const double denom = ta * ta * tb * tb * (ta * ta - tb * tb) * (ta * ta - tb * tb);
  est.var_mu = 4.0 * (std::pow(ta, 6.0) * sb + std::pow(tb, 6.0) * sa) / denom;
  est.var_eta = 144.0 * (ta * ta * sb + tb * tb * sa) / denom;
  est.blocks_used = 1;
  est.block_size = batch_a.shots + batch_b.shots;
  return est;
}

MleEstimate mle_from_probabilities(double prob_a, double prob_b, const TimeStepPair& pair) {
  check_pair(pair);
  MleEstimate est;
  invert_pair(1.0 - 2.0 * prob_a, 1.0 - 2.0 * prob_b, pair, &est.mu, &est.eta);
  return est;
}

double pair_log_likelihood(double mu, double eta, const TimeStepPair& pair, std::uint64_t x_a,
                           std::uint64_t m_a, std::uint64_t x_b, std::uint64_t m_b) {
  check_pair(pair);
  double ll = 0.0;
  const double taus[2] = {pair.tau_a, pair.tau_b};
  const double xs[2] = {static_cast<double>(x_a), static_cast<double>(x_b)};
  const double ms[2] = {static_cast<double>(m_a), static_cast<double>(m_b)};
  for (int t = 0; t < 2; ++t) {
    const double p = model_probability(taus[t], mu, eta);
    if (!(p > 0.0 && p < 1.0)) return -std::numeric_limits<double>::infinity();
    ll += xs[t] * std::log(p) + (ms[t] - xs[t]) * std::log1p(-p);
  }
  return ll;
}

std::pair<double, double> pair_score(double mu, double eta, const TimeStepPair& pair,
                                     std::uint64_t x_a, std::uint64_t m_a, std::uint64_t x_b,
                                     std::uint64_t m_b) {
  check_pair(pair);
  double d_mu = 0.0;
  double d_eta = 0.0;
  const double taus[2] = {pair.tau_a, pair.tau_b};
  const double xs[2] = {static_cast<double>(x_a), static_cast<double>(x_b)};
  const double ms[2] = {static_cast<double>(m_a), static_cast<double>(m_b)};
  for (int t = 0; t < 2; ++t) {
    const double tau = taus[t];
    const double p = model_probability(tau, mu, eta);
    if (!(p > 0.0 && p < 1.0)) {
      throw std::domain_error("pair_score: model probability outside (0, 1)");
    }
    const double resid = xs[t] / p - (ms[t] - xs[t]) / (1.0 - p);
    d_mu += resid * (-tau / 2.0);
    d_eta += resid * (tau * tau * tau / 12.0);
  }
  return {d_mu, d_eta};
}

namespace {

double bias_factor(const TimeStepPair& pair, bool tightened) {
  const double a2 = pair.tau_a * pair.tau_a;
  const double b2 = pair.tau_b * pair.tau_b;
  const double s = tightened ? std::max(a2, b2) : a2 + b2;
  return a2 * b2 * s / std::abs(a2 - b2);
}

}  // namespace

BiasBounds bias_estimators(const MleEstimate& estimate, const TimeStepPair& pair) {
  check_pair(pair);
  const double mag = std::abs(estimate.mu * estimate.eta) / 120.0;
  BiasBounds bounds;
  bounds.ansatz = mag * bias_factor(pair, false);
  bounds.tightened = mag * bias_factor(pair, true);
  return bounds;
}

double cubic_bias_bound(double fifth_moment_mag, const TimeStepPair& pair) {
  check_pair(pair);
  return std::abs(fifth_moment_mag) / 120.0 * bias_factor(pair, false);
}

double exact_bias(const SpectralOracle& oracle, const PureState& state, const TimeStepPair& pair) {
  check_pair(pair);
  const double ta = pair.tau_a;
  const double tb = pair.tau_b;
  const double sin_a = oracle.sine_expectation(state, ta);
  const double sin_b = oracle.sine_expectation(state, tb);
  const double mu =
      ((ta * ta / tb) * sin_b - (tb * tb / ta) * sin_a) / (ta * ta - tb * tb);
  return mu - oracle.expectation(state);
}

namespace {

struct DesignContext {
  double mu = 0.0;
  double eta = 0.0;
  double shots_per_tau = 0.0;
  double block_multiplier = 1.0;  // (block_index + 1)
  BiasMode mode = BiasMode::A1;
  const SpectralOracle* oracle = nullptr;
  const PureState* state = nullptr;
};

double design_cost(const TimeStepPair& pair, const DesignContext& ctx) {
  const double ta = pair.tau_a;
  const double tb = pair.tau_b;
  if (!(ta > 0.0 && tb > ta)) return kInfeasibleCost;
  const double pa = model_probability(ta, ctx.mu, ctx.eta);
  const double pb = model_probability(tb, ctx.mu, ctx.eta);
  if (!(pa >= 0.0 && pa <= 1.0 && pb >= 0.0 && pb <= 1.0)) return kInfeasibleCost;

  const double sa = pa * (1.0 - pa);
  const double sb = pb * (1.0 - pb);
  const double diff = ta * ta - tb * tb;
  const double variance = 4.0 * (std::pow(ta, 6.0) * sb + std::pow(tb, 6.0) * sa) /
                          (ctx.shots_per_tau * ta * ta * tb * tb * diff * diff);

  double bias = 0.0;
  switch (ctx.mode) {
    case BiasMode::A1:
      bias = std::abs(ctx.mu * ctx.eta) / 120.0 * bias_factor(pair, false);
      break;
    case BiasMode::A2:
      bias = std::abs(ctx.mu * ctx.eta) / 120.0 * bias_factor(pair, true);
      break;
    case BiasMode::Exact:
      bias = std::abs(exact_bias(*ctx.oracle, *ctx.state, pair));
      break;
  }
  return variance + ctx.block_multiplier * bias * bias;
}

}  // namespace

TimeStepPair design_next_pair(const MleEstimate& current, std::uint64_t block_index,
                              std::uint64_t shots_per_tau, BiasMode mode,
                              const DesignDomain& domain, const SpectralOracle* oracle,
                              const PureState* state) {
  if (!(domain.tau_min > 0.0 && domain.tau_cap > domain.tau_min)) {
    throw std::invalid_argument("design_next_pair: bad domain");
  }
  if (domain.grid < 8) throw std::invalid_argument("design_next_pair: grid too coarse");
  if (shots_per_tau == 0) throw std::invalid_argument("design_next_pair: zero shots");
  if (mode == BiasMode::Exact && (oracle == nullptr || state == nullptr)) {
    throw std::invalid_argument("design_next_pair: exact bias mode needs oracle and state");
  }

  DesignContext ctx;
  ctx.mu = current.mu;
  ctx.eta = current.eta;
  ctx.shots_per_tau = static_cast<double>(shots_per_tau);
  ctx.block_multiplier = static_cast<double>(block_index) + 1.0;
  ctx.mode = mode;
  ctx.oracle = oracle;
  ctx.state = state;

  const std::size_t n = domain.grid;
  const double log_lo = std::log(domain.tau_min);
  const double log_hi = std::log(domain.tau_cap);
  std::vector<double> grid(n);
  for (std::size_t i = 0; i < n; ++i) {
    grid[i] = std::exp(log_lo + (log_hi - log_lo) * static_cast<double>(i) /
                                    static_cast<double>(n - 1));
  }

  TimeStepPair best;
  double best_cost = kInfeasibleCost;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const TimeStepPair cand{grid[i], grid[j]};
      const double cost = design_cost(cand, ctx);
      if (cost < best_cost) {
        best_cost = cost;
        best = cand;
      }
    }
  }
  if (best_cost >= kInfeasibleCost) {
    throw std::runtime_error("design_next_pair: no feasible pair in domain");
  }

  // Coordinate descent around the grid optimum, halving the log step.
  double step = (log_hi - log_lo) / static_cast<double>(n - 1);
  for (int pass = 0; pass < 3; ++pass) {
    for (int coord = 0; coord < 2; ++coord) {
      double& tau = coord == 0 ? best.tau_a : best.tau_b;
      const double saved = tau;
      for (const double factor : {std::exp(step), std::exp(-step)}) {
        TimeStepPair cand = best;
        (coord == 0 ? cand.tau_a : cand.tau_b) =
            std::clamp(saved * factor, domain.tau_min, domain.tau_cap);
        const double cost = design_cost(cand, ctx);
        if (cost < best_cost) {
          best_cost = cost;
          tau = coord == 0 ? cand.tau_a : cand.tau_b;
        }
      }
    }
    step *= 0.5;
  }
  return best;
}

namespace {

// Start-up choice of the larger step: minimizes the pair-variance upper bound
// (ta^6 + tb^6) / (ta^2 tb^2 (ta^2 - tb^2)^2) at fixed tau_a.
double initial_tau_b(double tau_a, double tau_cap) {
  const double lo = tau_a * 1.05;
  if (lo >= tau_cap) return tau_cap;
  const double log_lo = std::log(lo);
  const double log_hi = std::log(tau_cap);
  double best = tau_cap;
  double best_val = std::numeric_limits<double>::infinity();
  constexpr int kPoints = 256;
  for (int i = 0; i < kPoints; ++i) {
    const double tb =
        std::exp(log_lo + (log_hi - log_lo) * static_cast<double>(i) / (kPoints - 1));
    const double a2 = tau_a * tau_a;
    const double b2 = tb * tb;
    const double val = (std::pow(tau_a, 6.0) + std::pow(tb, 6.0)) /
                       (a2 * b2 * (a2 - b2) * (a2 - b2));
    if (val < best_val) {
      best_val = val;
      best = tb;
    }
  }
  return best;
}

struct BlockRecord {
  TimeStepPair pair;
  double mu = 0.0;
  double eta = 0.0;
  double var_mu = 0.0;   // measured inverse-Fisher variance (trace diagnostics)
  double var_eta = 0.0;
  double weight_mu = 0.0;   // 1 / predicted var, frozen when the block lands
  double weight_eta = 0.0;
  double heuristic_var = 0.0;  // single-step shot-noise variance at tau_b
};

struct BlockPrediction {
  double var_mu = 0.0;
  double var_eta = 0.0;
  double heuristic = 0.0;
  bool feasible = false;
};

// Variances the model expects for a block at `pair` given parameters
// (mu, eta), before the block is measured. Pooling weights come from here:
// weights independent of the block's own tallies keep the pooled mean
// unbiased (tally-derived weights correlate with the estimates and drag the
// weighted mean toward extreme blocks).
BlockPrediction predict_block(const TimeStepPair& pair, double mu, double eta, double shots_a,
                              double shots_b) {
  BlockPrediction out;
  double pa = model_probability(pair.tau_a, mu, eta);
  double pb = model_probability(pair.tau_b, mu, eta);
  if (!(pa >= 0.0 && pa <= 1.0 && pb >= 0.0 && pb <= 1.0)) return out;
  pa = std::clamp(pa, 1e-3, 1.0 - 1e-3);
  pb = std::clamp(pb, 1e-3, 1.0 - 1e-3);
  const double ta = pair.tau_a;
  const double tb = pair.tau_b;
  const double sa = pa * (1.0 - pa) / shots_a;
  const double sb = pb * (1.0 - pb) / shots_b;
  const double denom = ta * ta * tb * tb * (ta * ta - tb * tb) * (ta * ta - tb * tb);
  out.var_mu = 4.0 * (std::pow(ta, 6.0) * sb + std::pow(tb, 6.0) * sa) / denom;
  out.var_eta = 144.0 * (ta * ta * sb + tb * tb * sa) / denom;
  out.heuristic = 4.0 * pb * (1.0 - pb) / (tb * tb * shots_b);
  out.feasible = true;
  return out;
}

}  // namespace

CubicRunResult cubic_run(const ObservableExpansion& obs, const PureState& state,
                         const CubicOptions& options, RngStream& rng, const ReadoutNoise& noise) {
  if (!(options.target_eps > 0.0)) throw std::invalid_argument("cubic_run: eps must be positive");
  if (options.block_size < 2) throw std::invalid_argument("cubic_run: block size must be >= 2");
  const std::uint64_t shots_a = options.block_size / 2;
  const std::uint64_t shots_b = options.block_size - shots_a;
  const double scale = mitigation_scale(noise);
  const SpectralOracle oracle(obs);

  // Start-up pair: small random tau_a, tau_b from the variance upper bound.
  TimeStepPair pair;
  pair.tau_a = std::clamp(rng.uniform(0.0, 0.1), options.domain.tau_min, options.domain.tau_cap);
  pair.tau_b = initial_tau_b(pair.tau_a, options.domain.tau_cap);

  CubicRunResult result;
  std::vector<BlockRecord> blocks;
  std::uint64_t cumulative = 0;
  const double target_sq = options.target_eps * options.target_eps;
  bool have_pool = false;
  double mu_prev = 0.0;
  double eta_prev = 0.0;

  for (std::uint64_t block = 0;; ++block) {
    const ShotBatch batch_a = sample_ancilla_z(oracle, state, pair.tau_a, shots_a, rng, noise);
    const ShotBatch batch_b = sample_ancilla_z(oracle, state, pair.tau_b, shots_b, rng, noise);
    cumulative += options.block_size;

    MleEstimate est = mle_pair(batch_a, batch_b, pair);
    est.mu *= scale;
    est.eta *= scale;
    est.var_mu *= scale * scale;
    est.var_eta *= scale * scale;

    BlockRecord rec;
    rec.pair = pair;
    rec.mu = est.mu;
    rec.eta = est.eta;
    rec.var_mu = est.var_mu;
    rec.var_eta = est.var_eta;
    // Weights are frozen before the block's tallies are seen: the pooled
    // estimate from the preceding blocks predicts this block's variances.
    // The first block (and any pair the model calls infeasible) falls back
    // to its own measured values.
    rec.weight_mu = 1.0 / est.var_mu;
    rec.weight_eta = 1.0 / est.var_eta;
    const double qb = bayes_probability(batch_b.plus_count, batch_b.shots);
    rec.heuristic_var = scale * scale * 4.0 * qb * (1.0 - qb) /
                        (pair.tau_b * pair.tau_b * static_cast<double>(batch_b.shots));
    if (have_pool) {
      const BlockPrediction pred =
          predict_block(pair, mu_prev / scale, eta_prev / scale, static_cast<double>(shots_a),
                        static_cast<double>(shots_b));
      if (pred.feasible) {
        rec.weight_mu = 1.0 / (scale * scale * pred.var_mu);
        rec.weight_eta = 1.0 / (scale * scale * pred.var_eta);
        rec.heuristic_var = scale * scale * pred.heuristic;
      }
    }
    blocks.push_back(rec);

    // Weighted pooling; the claimed variance uses each block's single-step
    // shot-noise scale, which is what the stopping rule tracks. The Fisher
    // pooled variance keeps the measured per-block variances for reporting.
    double weight_sum = 0.0;
    double mu_acc = 0.0;
    double claimed_acc = 0.0;
    double fisher_acc = 0.0;
    double eta_weight_sum = 0.0;
    double eta_acc = 0.0;
    double eta_fisher_acc = 0.0;
    for (const BlockRecord& b : blocks) {
      const double w = b.weight_mu;
      weight_sum += w;
      mu_acc += w * b.mu;
      claimed_acc += w * w * b.heuristic_var;
      fisher_acc += w * w * b.var_mu;
      const double we = b.weight_eta;
      eta_weight_sum += we;
      eta_acc += we * b.eta;
      eta_fisher_acc += we * we * b.var_eta;
    }
    const double mu_pool = mu_acc / weight_sum;
    const double eta_pool = eta_acc / eta_weight_sum;
    const double claimed_var = claimed_acc / (weight_sum * weight_sum);
    const double fisher_var = fisher_acc / (weight_sum * weight_sum);
    const double eta_fisher_var = eta_fisher_acc / (eta_weight_sum * eta_weight_sum);
    have_pool = true;
    mu_prev = mu_pool;
    eta_prev = eta_pool;

    MleEstimate pooled;
    pooled.mu = mu_pool;
    pooled.eta = eta_pool;
    double bias_acc = 0.0;
    for (const BlockRecord& b : blocks) {
      double bias = 0.0;
      switch (options.bias_mode) {
        case BiasMode::A1:
          bias = bias_estimators(pooled, b.pair).ansatz;
          break;
        case BiasMode::A2:
          bias = bias_estimators(pooled, b.pair).tightened;
          break;
        case BiasMode::Exact:
          bias = std::abs(exact_bias(oracle, state, b.pair));
          break;
      }
      bias_acc += bias * b.weight_mu;
    }
    const double bias_pool = bias_acc / weight_sum;
    const double mse = claimed_var + bias_pool * bias_pool;

    CubicTraceRow row;
    row.block = block;
    row.tau_a = pair.tau_a;
    row.tau_b = pair.tau_b;
    row.x_a = batch_a.plus_count;
    row.x_b = batch_b.plus_count;
    row.mu = mu_pool;
    row.eta = eta_pool;
    row.var_mu = est.var_mu;
    {
      const BiasBounds bounds = bias_estimators(pooled, pair);
      row.bias_a1 = bounds.ansatz;
      row.bias_a2 = bounds.tightened;
    }
    if (options.emit_exact_bias || options.bias_mode == BiasMode::Exact) {
      row.bias_exact = exact_bias(oracle, state, pair);
    }
    row.mse = mse;
    row.cumulative_shots = cumulative;
    result.trace.push_back(row);

    if (mse <= target_sq) {
      result.report.value = mu_pool;
      result.report.variance = claimed_var;
      result.report.bias_bound = bias_pool;
      result.report.mse = mse;
      result.report.total_shots = cumulative;
      result.eta = eta_pool;
      result.fisher_variance = fisher_var;
      result.fisher_variance_eta = eta_fisher_var;
      return result;
    }
    if (cumulative >= options.shot_cap) {
      throw std::runtime_error("cubic_run: shot cap reached before target");
    }

    // Data-driven step cap keeps tau |mu| <= 2/3, inside the monotone window
    // of the sine and away from model-probability saturation.
    DesignDomain next_domain = options.domain;
    if (mu_pool != 0.0) {
      const double cap = (2.0 / 3.0) / std::abs(mu_pool);
      next_domain.tau_cap =
          std::clamp(cap, 5.0 * options.domain.tau_min, options.domain.tau_cap);
    }
    MleEstimate snapshot = pooled;
    snapshot.blocks_used = block + 1;
    snapshot.block_size = options.block_size;
    pair = design_next_pair(snapshot, block + 1, shots_b, options.bias_mode, next_domain,
                            &oracle, &state);
  }
}

}  // namespace qestim
