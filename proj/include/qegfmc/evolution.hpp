#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "qegfmc/common.hpp"
#include "qegfmc/pauli.hpp"
#include "qegfmc/state_vector.hpp"

namespace qegfmc {

/// First-order product formula for exp(-i H t). Terms are ordered by
/// coefficient magnitude, largest first (ties by string), and the step
/// operator is exp(-i H_M dt) ... exp(-i H_1 dt) with H_1 applied first.
/// The identity term is kept: it only contributes a phase, but that phase is
/// observable once the evolution is controlled.
struct TrotterPlan {
  struct Term {
    PauliString pauli;
    double coeff = 0.0;
  };

  int n_qubits = 0;
  std::vector<Term> terms;
  double dt = 0.01;

  static TrotterPlan from_operator(const PauliOperator& h, double dt) {
    if (!(dt > 0.0)) throw ConfigError("Trotter step must be positive");
    if (!h.is_hermitian(1e-10)) throw NumericalError("Trotter plan needs a Hermitian operator");
    TrotterPlan plan;
    plan.n_qubits = h.n_qubits();
    plan.dt = dt;
    for (const auto& [p, c] : h.terms()) plan.terms.push_back({p, c.real()});
    std::stable_sort(plan.terms.begin(), plan.terms.end(), [](const Term& a, const Term& b) {
      return std::abs(a.coeff) > std::abs(b.coeff);
    });
    return plan;
  }

  PauliOperator to_operator() const {
    PauliOperator h(n_qubits);
    for (const auto& t : terms) h.add(t.pauli, t.coeff);
    return h;
  }

  /// Number of steps used for a duration |t| and the unrepresented remainder.
  long steps_for(double t) const { return std::lround(std::abs(t) / dt); }
  double residual(double t) const { return std::abs(t) - static_cast<double>(steps_for(t)) * dt; }
};

/// One product-formula step of length tau on a register segment. Negative
/// tau applies the adjoint of the forward step of length |tau|.
template <class Vec>
void trotter_step_inplace(const TrotterPlan& plan, Vec&& v, double tau) {
  if (tau >= 0.0) {
    for (const auto& t : plan.terms) StateVector::apply_pauli_exponential(v, t.pauli, t.coeff * tau);
  } else {
    for (auto it = plan.terms.rbegin(); it != plan.terms.rend(); ++it)
      StateVector::apply_pauli_exponential(v, it->pauli, it->coeff * tau);
  }
}

inline StateVector trotter_step(const TrotterPlan& plan, StateVector v) {
  if (v.n_qubits() != plan.n_qubits) throw DimensionError("state does not match Trotter plan");
  trotter_step_inplace(plan, v.amplitudes(), plan.dt);
  return v;
}

/// round(t/dt) Trotter steps; t must be non-negative.
inline StateVector evolve(const TrotterPlan& plan, StateVector v, double t) {
  if (t < 0.0) throw ConfigError("evolution time must be non-negative");
  if (v.n_qubits() != plan.n_qubits) throw DimensionError("state does not match Trotter plan");
  const long steps = plan.steps_for(t);
  for (long k = 0; k < steps; ++k) trotter_step_inplace(plan, v.amplitudes(), plan.dt);
  return v;
}

enum class EvolutionBackend { Trotter, Exact };

inline std::string to_string(EvolutionBackend b) { return b == EvolutionBackend::Trotter ? "trotter" : "exact"; }

inline EvolutionBackend parse_evolution_backend(const std::string& s) {
  if (s == "trotter") return EvolutionBackend::Trotter;
  if (s == "exact") return EvolutionBackend::Exact;
  throw ConfigError("unknown evolution backend '" + s + "'");
}

/// Real-time propagator U(t) = exp(-i H t) for either backend. Signed times
/// are allowed: the Trotter backend applies the adjoint product for t < 0, so
/// U(-t) = U(t)^dagger holds exactly in both backends.
class Propagator {
 public:
  Propagator(const PauliOperator& h, EvolutionBackend backend, double trotter_dt = 0.01)
      : n_(h.n_qubits()), backend_(backend) {
    if (backend == EvolutionBackend::Trotter) {
      plan_ = TrotterPlan::from_operator(h, trotter_dt);
    } else {
      if (n_ > 12) throw DimensionError("exact evolution backend supports at most 12 qubits");
      const MatrixXc dense = h.to_dense();
      Eigen::SelfAdjointEigenSolver<MatrixXc> es(0.5 * (dense + dense.adjoint()));
      if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition for exact evolution failed");
      eigenvalues_ = es.eigenvalues();
      eigenvectors_ = es.eigenvectors();
    }
  }

  int n_qubits() const { return n_; }
  EvolutionBackend backend() const { return backend_; }
  const TrotterPlan& plan() const { return plan_; }

  /// In-place U(t) on a segment holding an n-qubit register.
  template <class Vec>
  void apply(Vec&& v, double t) const {
    if (v.size() != (Eigen::Index{1} << n_)) throw DimensionError("state does not match propagator");
    if (t == 0.0) return;
    if (backend_ == EvolutionBackend::Exact) {
      const VectorXc coeffs = eigenvectors_.adjoint() * v;
      VectorXc phased(coeffs.size());
      for (Eigen::Index k = 0; k < coeffs.size(); ++k)
        phased(k) = std::exp(cplx(0.0, -eigenvalues_(k) * t)) * coeffs(k);
      v = eigenvectors_ * phased;
      return;
    }
    const long steps = plan_.steps_for(t);
    const double tau = t > 0.0 ? plan_.dt : -plan_.dt;
    for (long k = 0; k < steps; ++k) trotter_step_inplace(plan_, v, tau);
  }

  StateVector evolve(StateVector v, double t) const {
    if (v.n_qubits() != n_) throw DimensionError("state does not match propagator");
    apply(v.amplitudes(), t);
    return v;
  }

 private:
  int n_;
  EvolutionBackend backend_;
  TrotterPlan plan_;
  Eigen::VectorXd eigenvalues_;
  MatrixXc eigenvectors_;
};

/// Applies U(t) to the register (qubits 1..n) when the ancilla, qubit 0,
/// is |1>. With the ancilla as the most significant qubit this is the upper
/// half of the amplitude vector.
inline StateVector controlled_evolve(const Propagator& prop, StateVector v, double t, int ancilla = 0) {
  if (ancilla != 0) throw DimensionError("the ancilla must be qubit 0");
  if (v.n_qubits() != prop.n_qubits() + 1) throw DimensionError("controlled evolution needs 1 + n qubits");
  const Eigen::Index half = Eigen::Index{1} << prop.n_qubits();
  prop.apply(v.amplitudes().segment(half, half), t);
  return v;
}

inline StateVector controlled_evolve(const TrotterPlan& plan, StateVector v, double t) {
  if (t < 0.0) throw ConfigError("evolution time must be non-negative");
  if (v.n_qubits() != plan.n_qubits + 1) throw DimensionError("controlled evolution needs 1 + n qubits");
  const Eigen::Index half = Eigen::Index{1} << plan.n_qubits;
  auto seg = v.amplitudes().segment(half, half);
  for (long k = 0; k < plan.steps_for(t); ++k) trotter_step_inplace(plan, seg, plan.dt);
  return v;
}

}  // namespace qegfmc
