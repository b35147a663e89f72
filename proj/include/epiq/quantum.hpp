#ifndef EPIQ_QUANTUM_HPP
#define EPIQ_QUANTUM_HPP

// Exact finite-dimensional quantum mechanics over labeled registers: pure
// states, projective measurements, measurement-as-isometry (an observer
// register records the outcome), collapse ensembles, and record-state
// (no-collapse) probabilities for chains of nested observers.
//
// Basis convention: amplitude indices are big-endian in register order — the
// leftmost register is the most significant digit.

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "epiq/formula.hpp"  // for epiq::Error

namespace epiq {

// Tolerances used throughout: state/operator identities hold to kStateTol;
// events below kZeroProb are treated as impossible.
inline constexpr double kStateTol = 1e-9;
inline constexpr double kZeroProb = 1e-12;

using Complex = std::complex<double>;
using Amplitudes = std::vector<Complex>;

class ZeroProbabilityError : public Error {
 public:
  using Error::Error;
};

// ── Registers and matrices ──────────────────────────────────────────────────

struct Register {
  std::string label;
  int dim = 2;

  friend bool operator==(const Register& a, const Register& b) {
    return a.label == b.label && a.dim == b.dim;
  }
};

/// Dense row-major complex matrix; sized for few-qubit systems.
struct Matrix {
  int rows = 0;
  int cols = 0;
  Amplitudes a;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c) {}

  static Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
  }

  Complex& at(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
  const Complex& at(int i, int j) const {
    return a[static_cast<std::size_t>(i) * cols + j];
  }

  Matrix adjoint() const {
    Matrix m(cols, rows);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) m.at(j, i) = std::conj(at(i, j));
    return m;
  }

  friend Matrix operator*(const Matrix& x, const Matrix& y) {
    if (x.cols != y.rows) throw Error("matrix dimension mismatch in product");
    Matrix m(x.rows, y.cols);
    for (int i = 0; i < x.rows; ++i)
      for (int k = 0; k < x.cols; ++k) {
        const Complex v = x.at(i, k);
        if (v == Complex{}) continue;
        for (int j = 0; j < y.cols; ++j) m.at(i, j) += v * y.at(k, j);
      }
    return m;
  }

  friend Matrix operator-(const Matrix& x, const Matrix& y) {
    if (x.rows != y.rows || x.cols != y.cols)
      throw Error("matrix dimension mismatch in difference");
    Matrix m = x;
    for (std::size_t i = 0; i < m.a.size(); ++i) m.a[i] -= y.a[i];
    return m;
  }

  double max_abs() const {
    double v = 0;
    for (const Complex& z : a) v = std::max(v, std::abs(z));
    return v;
  }
};

inline Matrix kronecker(const Matrix& x, const Matrix& y) {
  Matrix m(x.rows * y.rows, x.cols * y.cols);
  for (int i = 0; i < x.rows; ++i)
    for (int j = 0; j < x.cols; ++j)
      for (int k = 0; k < y.rows; ++k)
        for (int l = 0; l < y.cols; ++l)
          m.at(i * y.rows + k, j * y.cols + l) = x.at(i, j) * y.at(k, l);
  return m;
}

inline Complex inner(const Amplitudes& x, const Amplitudes& y) {
  if (x.size() != y.size()) throw Error("vector dimension mismatch");
  Complex s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) s += std::conj(x[i]) * y[i];
  return s;
}

inline double norm2(const Amplitudes& x) { return inner(x, x).real(); }

/// |v⟩⟨v| for a unit vector v.
inline Matrix projector_onto(const Amplitudes& v) {
  if (std::abs(norm2(v) - 1.0) > kStateTol)
    throw Error("projector_onto expects a unit vector");
  const int n = static_cast<int>(v.size());
  Matrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m.at(i, j) = v[i] * std::conj(v[j]);
  return m;
}

// ── Pure states ─────────────────────────────────────────────────────────────

struct PureState {
  std::vector<Register> registers;
  Amplitudes amplitudes;

  PureState(std::vector<Register> regs, Amplitudes amps)
      : registers(std::move(regs)), amplitudes(std::move(amps)) {
    long d = 1;
    std::vector<std::string> seen;
    for (const auto& r : registers) {
      if (r.dim < 2) throw Error("register '" + r.label + "' needs dim >= 2");
      for (const auto& s : seen)
        if (s == r.label) throw Error("duplicate register label '" + s + "'");
      seen.push_back(r.label);
      d *= r.dim;
    }
    if (static_cast<long>(amplitudes.size()) != d)
      throw Error("amplitude vector length does not match register dims");
    if (std::abs(norm2(amplitudes) - 1.0) > kStateTol)
      throw Error("state is not normalized");
  }

  long dim() const { return static_cast<long>(amplitudes.size()); }

  int position(const std::string& label) const {
    for (std::size_t i = 0; i < registers.size(); ++i)
      if (registers[i].label == label) return static_cast<int>(i);
    throw Error("no register labeled '" + label + "'");
  }
};

/// Basis state |digits⟩ over the given registers.
inline PureState basis_state(std::vector<Register> regs,
                             const std::vector<int>& digits) {
  if (digits.size() != regs.size())
    throw Error("one digit per register required");
  long d = 1, index = 0;
  for (std::size_t k = 0; k < regs.size(); ++k) {
    if (digits[k] < 0 || digits[k] >= regs[k].dim)
      throw Error("digit out of range for register '" + regs[k].label + "'");
    index = index * regs[k].dim + digits[k];
    d *= regs[k].dim;
  }
  Amplitudes a(d);
  a[index] = 1.0;
  return PureState(std::move(regs), std::move(a));
}

inline PureState tensor(const PureState& x, const PureState& y) {
  std::vector<Register> regs = x.registers;
  for (const auto& r : y.registers) {
    for (const auto& q : x.registers)
      if (q.label == r.label)
        throw Error("register label '" + r.label + "' present on both sides");
    regs.push_back(r);
  }
  Amplitudes a;
  a.reserve(x.amplitudes.size() * y.amplitudes.size());
  for (const Complex& u : x.amplitudes)
    for (const Complex& v : y.amplitudes) a.push_back(u * v);
  return PureState(std::move(regs), std::move(a));
}

// ── Acting on register subsets ──────────────────────────────────────────────

namespace detail {

/// Index bookkeeping for a subset of registers: maps between full basis
/// indices and (subset digits, untouched rest).
struct SubsetIndexer {
  std::vector<long> weight;  // full-index stride of each chosen register
  std::vector<int> dims;     // dimension of each chosen register
  long sub_dim = 1;
  std::vector<long> delta;   // delta[s] = full-index offset of subset value s

  SubsetIndexer(const std::vector<Register>& regs,
                const std::vector<std::string>& labels) {
    std::vector<long> stride(regs.size(), 1);
    for (int k = static_cast<int>(regs.size()) - 2; k >= 0; --k)
      stride[k] = stride[k + 1] * regs[k + 1].dim;
    for (const auto& label : labels) {
      int pos = -1;
      for (std::size_t k = 0; k < regs.size(); ++k)
        if (regs[k].label == label) pos = static_cast<int>(k);
      if (pos < 0) throw Error("no register labeled '" + label + "'");
      for (long w : weight)
        if (w == stride[pos])
          throw Error("register '" + label + "' listed twice");
      weight.push_back(stride[pos]);
      dims.push_back(regs[pos].dim);
      sub_dim *= regs[pos].dim;
    }
    delta.resize(sub_dim);
    for (long s = 0; s < sub_dim; ++s) {
      long rem = s, off = 0;
      for (int j = static_cast<int>(dims.size()) - 1; j >= 0; --j) {
        off += (rem % dims[j]) * weight[j];
        rem /= dims[j];
      }
      delta[s] = off;
    }
  }

  long sub_index(long full) const {
    long s = 0;
    for (std::size_t j = 0; j < weight.size(); ++j)
      s = s * dims[j] + (full / weight[j]) % dims[j];
    return s;
  }
};

/// (op ⊗ identity on the rest) applied to amp, where op's indices follow the
/// subset registers in the order listed.
inline Amplitudes apply_on_subset(const std::vector<Register>& regs,
                                  const Amplitudes& amp, const Matrix& op,
                                  const std::vector<std::string>& labels) {
  SubsetIndexer ix(regs, labels);
  if (op.rows != ix.sub_dim || op.cols != ix.sub_dim)
    throw Error("operator dimension does not match the chosen registers");
  Amplitudes out(amp.size());
  for (long i = 0; i < static_cast<long>(amp.size()); ++i) {
    const long s = ix.sub_index(i);
    const long base = i - ix.delta[s];
    Complex acc = 0;
    for (long s2 = 0; s2 < ix.sub_dim; ++s2)
      acc += op.at(static_cast<int>(s), static_cast<int>(s2)) *
             amp[base + ix.delta[s2]];
    out[i] = acc;
  }
  return out;
}

}  // namespace detail

// ── Born rule, conditioning, families ───────────────────────────────────────

/// ⟨ψ|(π ⊗ 1)|ψ⟩ for a projector π acting on the listed registers.
inline double born_probability(const PureState& psi, const Matrix& projector,
                               const std::vector<std::string>& labels) {
  Amplitudes phi =
      detail::apply_on_subset(psi.registers, psi.amplitudes, projector, labels);
  Complex p = inner(psi.amplitudes, phi);
  if (std::abs(p.imag()) > kStateTol)
    throw Error("projector expectation came out non-real");
  return std::clamp(p.real(), 0.0, 1.0);
}

/// πψ/‖πψ‖. Throws ZeroProbabilityError when the projected weight is below
/// kZeroProb.
inline PureState condition(const PureState& psi, const Matrix& projector,
                           const std::vector<std::string>& labels) {
  Amplitudes phi =
      detail::apply_on_subset(psi.registers, psi.amplitudes, projector, labels);
  const double p = norm2(phi);
  if (p < kZeroProb)
    throw ZeroProbabilityError("zero-probability post-selection");
  const double scale = 1.0 / std::sqrt(p);
  for (Complex& z : phi) z *= scale;
  return PureState(psi.registers, std::move(phi));
}

/// A complete projective measurement: ordered outcome labels with one
/// projector each, acting on a designated register subset.
struct ProjectorFamily {
  std::vector<Register> registers;
  std::vector<std::pair<std::string, Matrix>> projectors;

  ProjectorFamily(std::vector<Register> regs,
                  std::vector<std::pair<std::string, Matrix>> projs)
      : registers(std::move(regs)), projectors(std::move(projs)) {
    int d = 1;
    for (const auto& r : registers) d *= r.dim;
    Matrix remainder = Matrix::identity(d);
    std::vector<std::string> seen;
    for (const auto& [label, p] : projectors) {
      for (const auto& s : seen)
        if (s == label) throw Error("duplicate outcome label '" + label + "'");
      seen.push_back(label);
      if (p.rows != d || p.cols != d)
        throw Error("projector '" + label + "' has the wrong dimension");
      if ((p - p.adjoint()).max_abs() > kStateTol)
        throw Error("projector '" + label + "' is not Hermitian");
      if ((p * p - p).max_abs() > kStateTol)
        throw Error("projector '" + label + "' is not idempotent");
      remainder = remainder - p;
    }
    if (remainder.max_abs() > kStateTol)
      throw Error("projector family is not complete");
  }

  std::vector<std::string> labels() const {
    std::vector<std::string> out;
    for (const auto& [label, _] : projectors) out.push_back(label);
    return out;
  }

  std::vector<std::string> register_labels() const {
    std::vector<std::string> out;
    for (const auto& r : registers) out.push_back(r.label);
    return out;
  }

  const Matrix& projector(const std::string& label) const {
    for (const auto& [l, p] : projectors)
      if (l == label) return p;
    throw Error("no outcome labeled '" + label + "'");
  }

  int dim() const {
    int d = 1;
    for (const auto& r : registers) d *= r.dim;
    return d;
  }
};

inline double born_probability(const PureState& psi,
                               const ProjectorFamily& family,
                               const std::string& outcome) {
  return born_probability(psi, family.projector(outcome),
                          family.register_labels());
}

inline PureState condition(const PureState& psi, const ProjectorFamily& family,
                           const std::string& outcome) {
  return condition(psi, family.projector(outcome), family.register_labels());
}

// ── Ensembles (collapse picture) ────────────────────────────────────────────

struct Ensemble {
  std::vector<std::pair<double, PureState>> branches;

  explicit Ensemble(std::vector<std::pair<double, PureState>> b)
      : branches(std::move(b)) {
    double total = 0;
    for (const auto& [p, state] : branches) {
      if (p < 0 || p > 1 + kStateTol)
        throw Error("branch probability out of range");
      if (!(state.registers == branches.front().second.registers))
        throw Error("ensemble branches disagree on registers");
      total += p;
    }
    if (std::abs(total - 1.0) > kStateTol)
      throw Error("ensemble probabilities do not sum to 1");
  }
};

/// Measure with collapse: one branch per outcome of weight > 1e-9, each
/// conditioned on its projector.
inline Ensemble collapse_measure(const PureState& psi,
                                 const ProjectorFamily& family) {
  std::vector<std::pair<double, PureState>> branches;
  for (const auto& [label, p] : family.projectors) {
    const double prob = born_probability(psi, p, family.register_labels());
    if (prob > 1e-9)
      branches.emplace_back(prob,
                            condition(psi, p, family.register_labels()));
  }
  return Ensemble(std::move(branches));
}

inline double ensemble_probability(const Ensemble& e, const Matrix& projector,
                                   const std::vector<std::string>& labels) {
  double total = 0;
  for (const auto& [p, state] : e.branches)
    total += p * born_probability(state, projector, labels);
  return total;
}

inline double ensemble_probability(const Ensemble& e,
                                   const ProjectorFamily& family,
                                   const std::string& outcome) {
  return ensemble_probability(e, family.projector(outcome),
                              family.register_labels());
}

/// The outcome the state is certain of (probability ≥ 1 − 1e-9), if any.
inline std::optional<std::string> certainty(const PureState& psi,
                                            const ProjectorFamily& family) {
  for (const auto& [label, p] : family.projectors)
    if (born_probability(psi, p, family.register_labels()) >= 1.0 - kStateTol)
      return label;
  return std::nullopt;
}

// ── Measurement as an isometry ──────────────────────────────────────────────

/// V: H_in → H_in ⊗ H_obs with orthonormal columns; the observer register is
/// appended as the least significant digit of the output index.
struct Isometry {
  std::vector<Register> inputs;
  Register observer;
  Matrix v;

  Isometry(std::vector<Register> ins, Register obs, Matrix m)
      : inputs(std::move(ins)), observer(std::move(obs)), v(std::move(m)) {
    int din = 1;
    for (const auto& r : inputs) din *= r.dim;
    if (v.cols != din || v.rows != din * observer.dim)
      throw Error("isometry matrix shape does not match its registers");
    if ((v.adjoint() * v - Matrix::identity(din)).max_abs() > kStateTol)
      throw Error("isometry columns are not orthonormal");
  }
};

/// |a⟩ ↦ |a⟩ ⊗ |A_a⟩ for the measured basis of a rank-1 family; the record
/// states |A_a⟩ are the observer's basis vectors in family label order.
inline Isometry measurement_isometry(const ProjectorFamily& family,
                                     const Register& observer) {
  const int d = family.dim();
  const int outcomes = static_cast<int>(family.projectors.size());
  if (observer.dim < outcomes)
    throw Error("observer register too small: needs dim >= " +
                std::to_string(outcomes));
  Matrix v(d * observer.dim, d);
  int record = 0;
  for (const auto& [label, p] : family.projectors) {
    double trace = 0;
    for (int i = 0; i < d; ++i) trace += p.at(i, i).real();
    if (std::abs(trace - 1.0) > kStateTol)
      throw Error("projector '" + label +
                  "' is not rank-1; cannot record a basis outcome");
    // Extract the unit vector spanning the rank-1 projector.
    int pivot = 0;
    for (int i = 1; i < d; ++i)
      if (p.at(i, i).real() > p.at(pivot, pivot).real()) pivot = i;
    const double scale = 1.0 / std::sqrt(p.at(pivot, pivot).real());
    Amplitudes a(d);
    for (int i = 0; i < d; ++i) a[i] = p.at(i, pivot) * scale;
    // Add (|a⟩ ⊗ e_record)⟨a| to the isometry.
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        v.at(i * observer.dim + record, j) += a[i] * std::conj(a[j]);
    ++record;
  }
  return Isometry(family.registers, observer, std::move(v));
}

/// Apply an isometry. If the observer register is already part of the state
/// it must be in |0⟩ (the ready state) and is written in place; otherwise it
/// is appended to the register list.
inline PureState apply_isometry(const PureState& psi, const Isometry& iso) {
  PureState st = psi;
  bool present = false;
  for (const auto& r : st.registers)
    if (r.label == iso.observer.label) {
      if (!(r == iso.observer))
        throw Error("observer register '" + r.label +
                    "' present with a different dimension");
      present = true;
    }
  if (!present) {
    Amplitudes ground(iso.observer.dim);
    ground[0] = 1.0;
    st = tensor(st, PureState({iso.observer}, std::move(ground)));
  } else {
    detail::SubsetIndexer obs_ix(st.registers, {iso.observer.label});
    for (long i = 0; i < st.dim(); ++i)
      if (obs_ix.sub_index(i) != 0 && std::abs(st.amplitudes[i]) > kStateTol)
        throw Error("observer register '" + iso.observer.label +
                    "' is not in its ready state");
  }
  // Embed the rectangular isometry as a square operator on (inputs, observer)
  // whose columns with a non-ready observer are never exercised.
  const int din = iso.v.cols;
  const int m = iso.v.rows;
  Matrix u(m, m);
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < din; ++c)
      u.at(r, c * iso.observer.dim) = iso.v.at(r, c);
  std::vector<std::string> labels;
  for (const auto& r : iso.inputs) labels.push_back(r.label);
  labels.push_back(iso.observer.label);
  Amplitudes out = detail::apply_on_subset(st.registers, st.amplitudes, u,
                                           labels);
  return PureState(st.registers, std::move(out));
}

/// Apply a unitary on the listed registers.
inline PureState apply_unitary(const PureState& psi, const Matrix& u,
                               const std::vector<std::string>& labels) {
  if (u.rows != u.cols ||
      (u.adjoint() * u - Matrix::identity(u.rows)).max_abs() > kStateTol)
    throw Error("operator is not unitary");
  Amplitudes out =
      detail::apply_on_subset(psi.registers, psi.amplitudes, u, labels);
  return PureState(psi.registers, std::move(out));
}

// ── Record-state (no-collapse) probabilities ────────────────────────────────

/// One nested observer: a measurement family plus the register that records
/// its outcome.
struct ObserverStep {
  ProjectorFamily family;
  Register observer;
};

namespace detail {

inline PureState run_observers(const PureState& phi,
                               const std::vector<ObserverStep>& observers) {
  PureState st = phi;
  for (const auto& step : observers)
    st = apply_isometry(st, measurement_isometry(step.family, step.observer));
  return st;
}

/// Projects the post-measurement state onto the record values in `query`
/// (observer label → outcome label) and returns the squared norm.
inline double record_weight(const PureState& st,
                            const std::vector<ObserverStep>& observers,
                            const std::map<std::string, std::string>& query) {
  Amplitudes amp = st.amplitudes;
  for (const auto& [obs_label, outcome] : query) {
    const ObserverStep* step = nullptr;
    for (const auto& s : observers)
      if (s.observer.label == obs_label) step = &s;
    if (!step) throw Error("no observer registered as '" + obs_label + "'");
    const std::vector<std::string> labels = step->family.labels();
    int idx = -1;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == outcome) idx = static_cast<int>(i);
    if (idx < 0)
      throw Error("observer '" + obs_label + "' has no outcome '" + outcome +
                  "'");
    Amplitudes record(step->observer.dim);
    record[idx] = 1.0;
    amp = apply_on_subset(st.registers, amp, projector_onto(record),
                          {obs_label});
  }
  return norm2(amp);
}

}  // namespace detail

/// q(query): probability of the joint observer records after measuring
/// unitarily (isometries, no collapse) in the order given.
inline double relstate_probability(
    const PureState& phi, const std::vector<ObserverStep>& observers,
    const std::map<std::string, std::string>& query) {
  PureState st = detail::run_observers(phi, observers);
  return detail::record_weight(st, observers, query);
}

/// q(query | given) = q(query ∪ given) / q(given); the conditioning record
/// must have probability ≥ 1e-12.
inline double relstate_conditional(
    const PureState& phi, const std::vector<ObserverStep>& observers,
    const std::map<std::string, std::string>& query,
    const std::map<std::string, std::string>& given) {
  PureState st = detail::run_observers(phi, observers);
  const double denom = detail::record_weight(st, observers, given);
  if (denom < kZeroProb)
    throw ZeroProbabilityError("conditioning on a zero-probability record");
  std::map<std::string, std::string> joint = given;
  for (const auto& [k, v] : query) {
    auto it = joint.find(k);
    if (it != joint.end() && it->second != v) return 0.0;
    joint[k] = v;
  }
  return detail::record_weight(st, observers, joint) / denom;
}

// ── Stock bases and families ────────────────────────────────────────────────

/// Computational-basis family on one register, labels "0".."d-1".
inline ProjectorFamily z_family(const Register& r) {
  std::vector<std::pair<std::string, Matrix>> projs;
  for (int i = 0; i < r.dim; ++i) {
    Amplitudes v(r.dim);
    v[i] = 1.0;
    projs.emplace_back(std::to_string(i), projector_onto(v));
  }
  return ProjectorFamily({r}, std::move(projs));
}

/// (|00⟩ − |11⟩)/√2 on a two-qubit pair — the standard "okminus" vector.
inline Amplitudes okminus_vector() {
  const double s = 1.0 / std::sqrt(2.0);
  return {s, 0.0, 0.0, -s};
}

/// (|00⟩ + |11⟩)/√2 on a two-qubit pair — the standard "failplus" vector.
inline Amplitudes failplus_vector() {
  const double s = 1.0 / std::sqrt(2.0);
  return {s, 0.0, 0.0, s};
}

/// Lab measurement family {ok, fail, rest} on a two-qubit pair: ok/fail are
/// the rank-1 projectors onto okminus/failplus, rest completes the family
/// (it never fires on states supported on span{|00⟩, |11⟩}).
inline ProjectorFamily okfail_family(const Register& r1, const Register& r2) {
  if (r1.dim != 2 || r2.dim != 2)
    throw Error("ok/fail family needs two qubits");
  Matrix ok = projector_onto(okminus_vector());
  Matrix fail = projector_onto(failplus_vector());
  Matrix rest = Matrix::identity(4) - ok - fail;
  std::vector<std::pair<std::string, Matrix>> projs;
  projs.emplace_back("ok", std::move(ok));
  projs.emplace_back("fail", std::move(fail));
  projs.emplace_back("rest", std::move(rest));
  return ProjectorFamily({r1, r2}, std::move(projs));
}

/// Rank-1 family from an orthonormal basis given as (label, vector) pairs.
inline ProjectorFamily basis_family(
    std::vector<Register> regs,
    const std::vector<std::pair<std::string, Amplitudes>>& basis) {
  std::vector<std::pair<std::string, Matrix>> projs;
  for (const auto& [label, v] : basis)
    projs.emplace_back(label, projector_onto(v));
  return ProjectorFamily(std::move(regs), std::move(projs));
}

}  // namespace epiq

#endif  // EPIQ_QUANTUM_HPP
