#include "qestim/conditions.hpp"

#include <cmath>
#include <stdexcept>

#include "qestim/sqpe.hpp"

namespace qestim {

double ConditionInput::ratio() const {
  if (!(traceless_one_norm > 0.0)) {
    throw std::invalid_argument("ConditionInput: traceless one-norm must be positive");
  }
  return mean_abs / traceless_one_norm;
}

namespace {

void check_order_eps(std::size_t order, double eps_r) {
  if (order == 0) throw std::invalid_argument("advantage condition: order must be >= 1");
  if (!(eps_r > 0.0)) throw std::invalid_argument("advantage condition: eps_r must be positive");
}

double prefactor_pow_k(std::size_t order) {
  return std::pow(shot_prefactor(order), static_cast<double>(order));
}

}  // namespace

bool condition_exact(const ConditionInput& input, double odd_moment_2k1) {
  check_order_eps(input.order, input.eps_r);
  const double K = static_cast<double>(input.order);
  const double rhs = prefactor_pow_k(input.order) / input.eps_r * std::abs(odd_moment_2k1) /
                     std::pow(input.traceless_one_norm, 2.0 * K + 1.0);
  return input.ratio() >= rhs;
}

bool condition_gamma(double ratio, double eps_r, std::size_t order, double gamma_k, double alpha0,
                     double traceless_one_norm) {
  check_order_eps(order, eps_r);
  if (!(traceless_one_norm > 0.0)) {
    throw std::invalid_argument("condition_gamma: traceless one-norm must be positive");
  }
  const double K = static_cast<double>(order);
  const double amplification =
      std::pow(1.0 + std::abs(alpha0) / traceless_one_norm, 2.0 * K + 1.0);
  return ratio >= prefactor_pow_k(order) / eps_r * gamma_k * amplification;
}

bool condition_eigen(double lambda_ratio, double eps_r, std::size_t order) {
  check_order_eps(order, eps_r);
  const double rhs =
      std::pow(eps_r, 1.0 / (2.0 * static_cast<double>(order))) / std::sqrt(shot_prefactor(order));
  return lambda_ratio <= rhs;
}

LooseVerdict condition_loose(const ConditionInput& input) {
  check_order_eps(input.order, input.eps_r);
  if (input.variance < 0.0 || input.even_moment < 0.0) {
    throw std::invalid_argument("condition_loose: moments must be nonnegative");
  }
  const double K = static_cast<double>(input.order);
  const double scale = prefactor_pow_k(input.order) / input.eps_r;
  const double traceless_pow = std::pow(input.traceless_one_norm, 2.0 * K + 1.0);

  LooseVerdict verdict;
  const double cov_numerator =
      input.even_moment * input.mean_abs +
      std::pow(input.full_one_norm, 2.0 * K - 1.0) * input.variance;
  verdict.covariance_bound = input.ratio() >= scale * cov_numerator / traceless_pow;

  const double norm_numerator = std::pow(input.full_one_norm, 2.0 * K + 1.0) *
                                (1.0 + input.variance / (input.full_one_norm * input.full_one_norm));
  verdict.norm_bound = input.ratio() >= scale * norm_numerator / traceless_pow;
  return verdict;
}

double even_moment_fidelity_bound(double lambda_phi, double delta, double full_one_norm,
                                  std::size_t order) {
  if (order == 0) throw std::invalid_argument("even_moment_fidelity_bound: order must be >= 1");
  if (!(delta >= 0.0 && delta <= 1.0)) {
    throw std::invalid_argument("even_moment_fidelity_bound: delta outside [0, 1]");
  }
  const double K = static_cast<double>(order);
  return std::pow(lambda_phi, 2.0 * K) + delta * std::pow(full_one_norm, 2.0 * K);
}

std::vector<RegionRow> region_scan(RegionMode mode, const RegionScanSettings& settings) {
  if (settings.grid < 16) throw std::invalid_argument("region_scan: grid must be >= 16");
  if (settings.orders.empty()) throw std::invalid_argument("region_scan: no orders requested");

  double x_min = settings.x_min;
  double x_max = settings.x_max;
  if (x_min <= 0.0 || x_max <= 0.0) {
    if (mode == RegionMode::EigenRatio) {
      x_min = 1e-4;
      x_max = 1.0;
    } else {
      x_min = 1e-3;
      x_max = 100.0;
    }
  }
  if (!(x_max > x_min)) throw std::invalid_argument("region_scan: bad x range");

  std::vector<double> xs(settings.grid);
  const double log_lo = std::log(x_min);
  const double log_hi = std::log(x_max);
  for (std::size_t i = 0; i < settings.grid; ++i) {
    xs[i] = std::exp(log_lo + (log_hi - log_lo) * static_cast<double>(i) /
                                  static_cast<double>(settings.grid - 1));
  }

  std::vector<RegionRow> rows;
  if (mode == RegionMode::EigenRatio) {
    for (const std::size_t order : settings.orders) {
      const double f = shot_prefactor(order);
      for (const double x : xs) {
        RegionRow row;
        row.mode = "eigen_ratio";
        row.order = order;
        row.x = x;
        row.y_boundary = std::pow(x * std::sqrt(f), 2.0 * static_cast<double>(order));
        rows.push_back(row);
      }
    }
    return rows;
  }

  if (!(settings.mean_abs > 0.0 && settings.traceless_one_norm > 0.0 &&
        settings.full_one_norm > 0.0)) {
    throw std::invalid_argument("region_scan: variance mode needs mean and norms");
  }
  const double mean = settings.mean_abs;
  const double ratio = mean / settings.traceless_one_norm;
  for (const std::size_t order : settings.orders) {
    const double K = static_cast<double>(order);
    const double f_pow = prefactor_pow_k(order);
    const double traceless_pow = std::pow(settings.traceless_one_norm, 2.0 * K + 1.0);
    for (const double v : xs) {
      const double even_moment =
          std::pow(settings.full_one_norm, 2.0 * K - 2.0) * (mean * mean + v);
      const double cov_numerator =
          even_moment * mean + std::pow(settings.full_one_norm, 2.0 * K - 1.0) * v;
      RegionRow cov_row;
      cov_row.mode = "variance_covariance";
      cov_row.order = order;
      cov_row.x = v;
      cov_row.y_boundary = f_pow * cov_numerator / (traceless_pow * ratio);
      rows.push_back(cov_row);

      const double norm_numerator =
          std::pow(settings.full_one_norm, 2.0 * K + 1.0) *
          (1.0 + v / (settings.full_one_norm * settings.full_one_norm));
      RegionRow norm_row;
      norm_row.mode = "variance_norm";
      norm_row.order = order;
      norm_row.x = v;
      norm_row.y_boundary = f_pow * norm_numerator / (traceless_pow * ratio);
      rows.push_back(norm_row);
    }
  }
  return rows;
}

}  // namespace qestim
