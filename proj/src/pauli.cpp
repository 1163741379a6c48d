#include "qestim/pauli.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace qestim {
namespace {

constexpr std::size_t kMaxQubits = 10;

// Action of a single Pauli on one bit: P|b> = phase * |b ^ flip>.
inline cplx pauli_phase(Pauli p, int bit) {
  switch (p) {
    case Pauli::I:
      return {1.0, 0.0};
    case Pauli::X:
      return {1.0, 0.0};
    case Pauli::Y:
      return bit ? cplx{0.0, -1.0} : cplx{0.0, 1.0};
    case Pauli::Z:
      return bit ? cplx{-1.0, 0.0} : cplx{1.0, 0.0};
  }
  return {1.0, 0.0};
}

inline bool pauli_flips(Pauli p) { return p == Pauli::X || p == Pauli::Y; }

}  // namespace

char pauli_char(Pauli p) {
  static constexpr char table[] = {'I', 'X', 'Y', 'Z'};
  return table[static_cast<int>(p)];
}

Pauli pauli_from_char(char c) {
  switch (c) {
    case 'I':
      return Pauli::I;
    case 'X':
      return Pauli::X;
    case 'Y':
      return Pauli::Y;
    case 'Z':
      return Pauli::Z;
    default:
      throw std::invalid_argument(std::string("invalid Pauli character: ") + c);
  }
}

PauliString::PauliString(std::string_view label) {
  axes.reserve(label.size());
  for (char c : label) axes.push_back(pauli_from_char(c));
}

bool PauliString::is_identity() const {
  return std::all_of(axes.begin(), axes.end(),
                     [](Pauli p) { return p == Pauli::I; });
}

std::string PauliString::label() const {
  std::string out;
  out.reserve(axes.size());
  for (Pauli p : axes) out.push_back(pauli_char(p));
  return out;
}

Vector PauliString::apply(const Vector& state) const {
  const std::size_t n = axes.size();
  const std::size_t dim = std::size_t{1} << n;
  if (static_cast<std::size_t>(state.size()) != dim)
    throw std::invalid_argument("state dimension does not match Pauli string");

  std::size_t flip_mask = 0;
  for (std::size_t q = 0; q < n; ++q)
    if (pauli_flips(axes[q])) flip_mask |= std::size_t{1} << (n - 1 - q);

  Vector out(dim);
  for (std::size_t idx = 0; idx < dim; ++idx) {
    cplx phase{1.0, 0.0};
    for (std::size_t q = 0; q < n; ++q) {
      const int bit = static_cast<int>((idx >> (n - 1 - q)) & 1u);
      phase *= pauli_phase(axes[q], bit);
    }
    out[idx ^ flip_mask] = phase * state[idx];
  }
  return out;
}

double PauliString::expectation(const Vector& state) const {
  const Vector mapped = apply(state);
  const cplx val = state.dot(mapped);  // conjugates the left argument
  return val.real();
}

Matrix PauliString::dense() const {
  const std::size_t dim = std::size_t{1} << axes.size();
  Matrix m = Matrix::Zero(dim, dim);
  Vector basis = Vector::Zero(dim);
  for (std::size_t col = 0; col < dim; ++col) {
    basis.setZero();
    basis[col] = 1.0;
    m.col(col) = apply(basis);
  }
  return m;
}

std::size_t ObservableExpansion::qubits() const {
  if (terms.empty()) return 1;
  return terms.front().string.qubits();
}

void ObservableExpansion::validate() const {
  std::set<std::string> seen;
  const std::size_t n = qubits();
  if (n == 0 || n > kMaxQubits)
    throw std::invalid_argument("observable must act on 1..10 qubits");
  for (const auto& t : terms) {
    if (!(t.weight >= 0.0) || !std::isfinite(t.weight))
      throw std::invalid_argument("term weights must be finite and nonnegative");
    if (!std::isfinite(t.phase))
      throw std::invalid_argument("term phases must be finite");
    if (t.string.qubits() != n)
      throw std::invalid_argument("all Pauli strings must have equal length");
    if (t.string.is_identity())
      throw std::invalid_argument(
          "identity contribution belongs in identity_coeff, not in terms");
    if (!seen.insert(t.string.label()).second)
      throw std::invalid_argument("duplicate Pauli string: " + t.string.label());
  }
}

Norms ObservableExpansion::one_norms() const {
  Norms n;
  double sq = 0.0;
  for (const auto& t : terms) {
    n.traceless_one += t.weight;
    sq += t.weight * t.weight;
  }
  n.two = std::sqrt(sq);
  n.full_one = n.traceless_one + std::abs(identity_coeff);
  return n;
}

Matrix ObservableExpansion::dense() const {
  const std::size_t dim = std::size_t{1} << qubits();
  Matrix m = Matrix::Identity(dim, dim) * identity_coeff;
  for (const auto& t : terms) m += t.coefficient() * t.string.dense();
  return m;
}

double ObservableExpansion::expectation(const Vector& state) const {
  double acc = identity_coeff;
  for (const auto& t : terms) {
    acc += t.coefficient().real() * t.string.expectation(state);
  }
  return acc;
}

std::string ObservableExpansion::to_json() const {
  nlohmann::json j;
  j["identity_coeff"] = identity_coeff;
  j["terms"] = nlohmann::json::array();
  for (const auto& t : terms)
    j["terms"].push_back({{"weight", t.weight},
                          {"phase", t.phase},
                          {"string", t.string.label()}});
  return j.dump(2);
}

ObservableExpansion ObservableExpansion::from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  ObservableExpansion obs;
  obs.identity_coeff = j.at("identity_coeff").get<double>();
  for (const auto& jt : j.at("terms")) {
    PauliTerm t;
    t.weight = jt.at("weight").get<double>();
    t.phase = jt.at("phase").get<double>();
    t.string = PauliString(jt.at("string").get<std::string>());
    obs.terms.push_back(std::move(t));
  }
  obs.validate();
  return obs;
}

ObservableExpansion decompose(const Matrix& dense, double cutoff) {
  const auto dim = static_cast<std::size_t>(dense.rows());
  if (dense.rows() != dense.cols() || dim == 0)
    throw std::invalid_argument("matrix must be square and nonempty");
  std::size_t n = 0;
  while ((std::size_t{1} << n) < dim) ++n;
  if ((std::size_t{1} << n) != dim || n == 0 || n > kMaxQubits)
    throw std::invalid_argument("matrix dimension must be 2^n with 1 <= n <= 10");
  if ((dense - dense.adjoint()).cwiseAbs().maxCoeff() > 1e-10)
    throw std::invalid_argument("matrix must be Hermitian");

  ObservableExpansion obs;
  obs.identity_coeff = dense.trace().real() / static_cast<double>(dim);

  // Coefficient of P is Tr[P O] / 2^n; real because O is Hermitian and P^2 = 1.
  const std::size_t strings = std::size_t{1} << (2 * n);
  for (std::size_t code = 1; code < strings; ++code) {
    PauliString ps;
    ps.axes.resize(n);
    std::size_t c = code;
    for (std::size_t q = n; q-- > 0;) {
      ps.axes[q] = static_cast<Pauli>(c & 3u);
      c >>= 2;
    }
    if (ps.is_identity()) continue;
    const cplx tr = (ps.dense() * dense).trace() / static_cast<double>(dim);
    const double coeff = tr.real();
    if (std::abs(coeff) <= cutoff) continue;
    PauliTerm t;
    t.weight = std::abs(coeff);
    t.phase = coeff >= 0.0 ? 0.0 : M_PI;
    t.string = std::move(ps);
    obs.terms.push_back(std::move(t));
  }
  obs.validate();
  return obs;
}

PureState::PureState(Vector amps) : amplitudes(std::move(amps)) {
  if (amplitudes.size() == 0)
    throw std::invalid_argument("state must have at least one amplitude");
  if (norm_error() > 1e-8)
    throw std::invalid_argument("state vector is not normalized");
}

PureState PureState::basis(std::size_t qubits, std::size_t index) {
  Vector v = Vector::Zero(std::ptrdiff_t{1} << qubits);
  v[static_cast<std::ptrdiff_t>(index)] = 1.0;
  return PureState(std::move(v));
}

std::size_t PureState::qubits() const {
  std::size_t n = 0;
  while ((std::ptrdiff_t{1} << n) < amplitudes.size()) ++n;
  return n;
}

double PureState::norm_error() const { return std::abs(amplitudes.norm() - 1.0); }

}  // namespace qestim
