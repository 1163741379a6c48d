#include "qestim/trotter.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

#include <Eigen/SVD>

namespace qestim {

namespace {

constexpr double kE = 2.718281828459045235;

double full_norm(const ObservableExpansion& obs) { return obs.one_norms().full_one; }

double pow5(std::size_t j) { return std::pow(5.0, static_cast<double>(j) - 1.0); }

void check_tau_eps(double tau, double eps) {
  if (!(tau > 0.0)) throw std::invalid_argument("trotter: tau must be positive");
  if (!(eps > 0.0)) throw std::invalid_argument("trotter: eps must be positive");
}

std::uint64_t ceil_to_intervals(double value) {
  if (!(value > 0.0)) return 1;
  double c = std::ceil(value);
  if (c >= 9.2e18) throw std::overflow_error("trotter: interval count overflows");
  return static_cast<std::uint64_t>(c) < 1 ? 1 : static_cast<std::uint64_t>(c);
}

Matrix identity_of(const ObservableExpansion& obs) {
  const auto dim = static_cast<Eigen::Index>(std::size_t{1} << obs.qubits());
  return Matrix::Identity(dim, dim);
}

/// exp(i theta P) = cos(theta) I + i sin(theta) P.
Matrix term_exponential(const PauliString& string, double theta, const Matrix& eye) {
  return std::cos(theta) * eye + cplx(0.0, std::sin(theta)) * string.dense();
}

Matrix ordered_product(const ObservableExpansion& obs, double lambda, const Matrix& eye) {
  Matrix out = eye;
  for (const auto& term : obs.terms) {
    const double c = std::real(term.coefficient());
    out = out * term_exponential(term.string, lambda * c, eye);
  }
  return out;
}

/// Forward half-steps then the same half-steps reversed.
Matrix strang_step(const ObservableExpansion& obs, double lambda, const Matrix& eye) {
  Matrix out = eye;
  for (const auto& term : obs.terms) {
    const double c = std::real(term.coefficient());
    out = out * term_exponential(term.string, 0.5 * lambda * c, eye);
  }
  for (auto it = obs.terms.rbegin(); it != obs.terms.rend(); ++it) {
    const double c = std::real(it->coefficient());
    out = out * term_exponential(it->string, 0.5 * lambda * c, eye);
  }
  return out;
}

Matrix suzuki_step(const ObservableExpansion& obs, double lambda, std::size_t j,
                   const Matrix& eye) {
  if (j == 1) return strang_step(obs, lambda, eye);
  const double pj = 1.0 / (4.0 - std::pow(4.0, 1.0 / (2.0 * static_cast<double>(j) - 1.0)));
  const Matrix outer = suzuki_step(obs, pj * lambda, j - 1, eye);
  const Matrix inner = suzuki_step(obs, (1.0 - 4.0 * pj) * lambda, j - 1, eye);
  const Matrix outer2 = outer * outer;
  return outer2 * inner * outer2;
}

Matrix matrix_power(Matrix base, std::uint64_t exponent, const Matrix& eye) {
  Matrix out = eye;
  while (exponent > 0) {
    if (exponent & 1ull) out = out * base;
    exponent >>= 1;
    if (exponent > 0) base = base * base;
  }
  return out;
}

}  // namespace

double first_order_bound(const ObservableExpansion& obs, double tau, std::uint64_t r) {
  if (r == 0) throw std::invalid_argument("trotter: r must be positive");
  const double x = tau * full_norm(obs);
  const double rr = static_cast<double>(r);
  return x * x / rr * std::exp(x / rr);
}

TrotterPlan first_order_intervals(const ObservableExpansion& obs, double tau, double eps) {
  check_tau_eps(tau, eps);
  const double x = tau * full_norm(obs);
  const double needed = std::max(x, 2.0 * kE / (eps * tau) * x * x);
  TrotterPlan plan;
  plan.order_j = 0;
  plan.intervals = ceil_to_intervals(needed);
  plan.error_bound = first_order_bound(obs, tau, plan.intervals);
  plan.rho = x;
  return plan;
}

double suzuki_bound(const ObservableExpansion& obs, double tau, std::uint64_t r, std::size_t j) {
  if (r == 0) throw std::invalid_argument("trotter: r must be positive");
  if (j == 0) throw std::invalid_argument("trotter: suzuki order index j must be >= 1");
  const double x = 2.0 * tau * pow5(j) * full_norm(obs);
  const double rr = static_cast<double>(r);
  const double jj = static_cast<double>(j);
  return std::pow(x, 2.0 * jj + 1.0) / (3.0 * std::pow(rr, 2.0 * jj)) * std::exp(x / rr);
}

TrotterPlan suzuki_intervals(const ObservableExpansion& obs, double tau, double eps,
                             std::size_t j) {
  check_tau_eps(tau, eps);
  if (j == 0) throw std::invalid_argument("trotter: suzuki order index j must be >= 1");
  const double norm = full_norm(obs);
  const double rho = 2.0 * tau * norm * pow5(j);
  const double growth =
      std::pow(4.0 * kE / (3.0 * eps) * pow5(j) * norm, 1.0 / (2.0 * static_cast<double>(j)));
  TrotterPlan plan;
  plan.order_j = j;
  plan.intervals = ceil_to_intervals(rho * std::max(1.0, growth));
  plan.error_bound = suzuki_bound(obs, tau, plan.intervals, j);
  plan.rho = rho;
  return plan;
}

Matrix build_suzuki(const ObservableExpansion& obs, double tau, std::uint64_t r, std::size_t j) {
  if (r == 0) throw std::invalid_argument("trotter: r must be positive");
  const Matrix eye = identity_of(obs);
  const double lambda = tau / static_cast<double>(r);
  const Matrix step =
      j == 0 ? ordered_product(obs, lambda, eye) : suzuki_step(obs, lambda, j, eye);
  const cplx phase = std::polar(1.0, tau * obs.identity_coeff);
  return phase * matrix_power(step, r, eye);
}

double operator_norm_error(const Matrix& approx, const Matrix& exact) {
  Eigen::JacobiSVD<Matrix> svd(approx - exact);
  return svd.singularValues().size() > 0 ? svd.singularValues()(0) : 0.0;
}

std::uint64_t exponentials_per_interval(std::size_t terms, std::size_t j) {
  if (j == 0) return terms;
  std::uint64_t count = 2ull * terms;
  for (std::size_t i = 1; i < j; ++i) count *= 5ull;
  return count;
}

std::uint64_t controlled_two_qubit_gates(const TrotterPlan& plan, std::size_t terms) {
  return 2ull * exponentials_per_interval(terms, plan.order_j) * plan.intervals;
}

Matrix rz_matrix(double angle) {
  Matrix out = Matrix::Zero(2, 2);
  out(0, 0) = std::polar(1.0, 0.5 * angle);
  out(1, 1) = std::polar(1.0, -0.5 * angle);
  return out;
}

Matrix ry_matrix(double angle) {
  const double c = std::cos(0.5 * angle);
  const double s = std::sin(0.5 * angle);
  Matrix out(2, 2);
  out << cplx(c, 0.0), cplx(s, 0.0), cplx(-s, 0.0), cplx(c, 0.0);
  return out;
}

namespace {

Matrix gate_matrix4(const ControlledGate& gate) {
  Matrix out = Matrix::Identity(4, 4);
  switch (gate.kind) {
    case ControlledGate::Kind::AncillaPhase: {
      const cplx phase = std::polar(1.0, gate.angle);
      out(2, 2) = phase;
      out(3, 3) = phase;
      break;
    }
    case ControlledGate::Kind::TargetRz:
    case ControlledGate::Kind::TargetRy: {
      const Matrix g = gate.kind == ControlledGate::Kind::TargetRz ? rz_matrix(gate.angle)
                                                                   : ry_matrix(gate.angle);
      out.block<2, 2>(0, 0) = g;
      out.block<2, 2>(2, 2) = g;
      break;
    }
    case ControlledGate::Kind::Cnot: {
      out.setZero();
      out(0, 0) = 1.0;
      out(1, 1) = 1.0;
      out(2, 3) = 1.0;
      out(3, 2) = 1.0;
      break;
    }
  }
  return out;
}

}  // namespace

Matrix ControlledCircuit::matrix() const {
  Matrix out = Matrix::Identity(4, 4);
  for (const auto& gate : gates) out = gate_matrix4(gate) * out;
  return out;
}

Matrix ControlledCircuit::controlled(const Matrix& u) {
  Matrix out = Matrix::Identity(4, 4);
  out.block<2, 2>(2, 2) = u;
  return out;
}

ControlledCircuit controlled_from_unitary(const Matrix& u) {
  if (u.rows() != 2 || u.cols() != 2)
    throw std::invalid_argument("controlled_from_unitary: expected a 2x2 matrix");
  const Matrix defect = u.adjoint() * u - Matrix::Identity(2, 2);
  if (defect.cwiseAbs().maxCoeff() > 1e-10)
    throw std::invalid_argument("controlled_from_unitary: matrix is not unitary");

  ControlledCircuit circuit;
  circuit.target_unitary = u;

  const cplx det = u(0, 0) * u(1, 1) - u(0, 1) * u(1, 0);
  circuit.theta0 = 0.5 * std::arg(det);
  const Matrix v = std::polar(1.0, -circuit.theta0) * u;
  const cplx a = v(0, 0);
  const cplx b = v(0, 1);

  circuit.theta2 = 2.0 * std::atan2(std::abs(b), std::abs(a));
  constexpr double kTiny = 1e-14;
  if (std::abs(b) < kTiny) {
    circuit.theta1 = 2.0 * std::arg(a);
    circuit.theta3 = 0.0;
  } else if (std::abs(a) < kTiny) {
    circuit.theta1 = 2.0 * std::arg(b);
    circuit.theta3 = 0.0;
  } else {
    circuit.theta1 = std::arg(a) + std::arg(b);
    circuit.theta3 = std::arg(a) - std::arg(b);
  }

  const bool trivial_rotation = std::abs(circuit.theta1) < kTiny &&
                                std::abs(circuit.theta2) < kTiny &&
                                std::abs(circuit.theta3) < kTiny;
  using Kind = ControlledGate::Kind;
  circuit.gates.push_back({Kind::AncillaPhase, circuit.theta0});
  if (!trivial_rotation) {
    circuit.gates.push_back({Kind::TargetRz, 0.5 * (circuit.theta3 - circuit.theta1)});
    circuit.gates.push_back({Kind::Cnot, 0.0});
    circuit.gates.push_back({Kind::TargetRz, -0.5 * (circuit.theta3 + circuit.theta1)});
    circuit.gates.push_back({Kind::TargetRy, -0.5 * circuit.theta2});
    circuit.gates.push_back({Kind::Cnot, 0.0});
    circuit.gates.push_back({Kind::TargetRy, 0.5 * circuit.theta2});
    circuit.gates.push_back({Kind::TargetRz, circuit.theta1});
  }
  return circuit;
}

ControlledCircuit controlled_angles(double alpha, double beta, double gamma, double delta) {
  const double phase = 0.5 * delta * (alpha + gamma);
  const double x = delta * beta;
  const double z = 0.5 * delta * (alpha - gamma);
  const double w = std::hypot(x, z);

  Matrix u(2, 2);
  if (w < 1e-300) {
    u = std::polar(1.0, phase) * Matrix::Identity(2, 2);
  } else {
    const double c = std::cos(w);
    const double s = std::sin(w);
    Matrix axis(2, 2);
    axis << cplx(z / w, 0.0), cplx(x / w, 0.0), cplx(x / w, 0.0), cplx(-z / w, 0.0);
    u = std::polar(1.0, phase) * (c * Matrix::Identity(2, 2) + cplx(0.0, s) * axis);
  }
  return controlled_from_unitary(u);
}

}  // namespace qestim
