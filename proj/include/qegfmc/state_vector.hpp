#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qegfmc/common.hpp"
#include "qegfmc/pauli.hpp"
#include "qegfmc/rng.hpp"

namespace qegfmc {

using Matrix2c = Eigen::Matrix2cd;

/// Dense amplitudes over 2^n basis states; qubit q is bit n-1-q of the index.
class StateVector {
 public:
  StateVector() = default;
  explicit StateVector(int n_qubits) : n_(n_qubits), amp_(VectorXc::Zero(dim_for(n_qubits))) { amp_(0) = 1.0; }
  StateVector(int n_qubits, VectorXc amplitudes) : n_(n_qubits), amp_(std::move(amplitudes)) {
    if (amp_.size() != dim_for(n_qubits)) throw DimensionError("amplitude count does not match qubit count");
  }

  static StateVector basis(int n_qubits, Bits index) {
    StateVector s(n_qubits);
    s.amp_(0) = 0.0;
    s.amp_(static_cast<Eigen::Index>(index)) = 1.0;
    return s;
  }

  /// Normalizes the given amplitudes; throws on a zero vector.
  static StateVector normalized(int n_qubits, VectorXc amplitudes) {
    const double nrm = amplitudes.norm();
    if (nrm == 0.0) throw NumericalError("cannot normalize a zero vector");
    return StateVector(n_qubits, amplitudes / nrm);
  }

  int n_qubits() const { return n_; }
  Eigen::Index dim() const { return amp_.size(); }
  const VectorXc& amplitudes() const { return amp_; }
  VectorXc& amplitudes() { return amp_; }
  cplx operator[](Bits i) const { return amp_(static_cast<Eigen::Index>(i)); }
  double norm() const { return amp_.norm(); }

  /// Applies a single-qubit matrix to qubit q.
  void apply(const Matrix2c& u, int q) {
    const Bits bit = check_qubit(q);
    for (Bits i = 0; i < static_cast<Bits>(dim()); ++i) {
      if (i & bit) continue;
      const auto i0 = static_cast<Eigen::Index>(i), i1 = static_cast<Eigen::Index>(i | bit);
      const cplx a = amp_(i0), b = amp_(i1);
      amp_(i0) = u(0, 0) * a + u(0, 1) * b;
      amp_(i1) = u(1, 0) * a + u(1, 1) * b;
    }
  }

  void h(int q) { apply(gate_h(), q); }
  void s(int q) { apply(gate_s(), q); }
  void sdg(int q) { apply(gate_s().adjoint(), q); }
  void x(int q) {
    const Bits bit = check_qubit(q);
    for (Bits i = 0; i < static_cast<Bits>(dim()); ++i)
      if (!(i & bit)) std::swap(amp_(static_cast<Eigen::Index>(i)), amp_(static_cast<Eigen::Index>(i | bit)));
  }
  void z(int q) {
    const Bits bit = check_qubit(q);
    for (Bits i = 0; i < static_cast<Bits>(dim()); ++i)
      if (i & bit) amp_(static_cast<Eigen::Index>(i)) = -amp_(static_cast<Eigen::Index>(i));
  }
  void cnot(int control, int target) {
    const Bits c = check_qubit(control), t = check_qubit(target);
    if (c == t) throw DimensionError("CNOT control and target coincide");
    for (Bits i = 0; i < static_cast<Bits>(dim()); ++i)
      if ((i & c) && !(i & t)) std::swap(amp_(static_cast<Eigen::Index>(i)), amp_(static_cast<Eigen::Index>(i | t)));
  }
  void swap(int a, int b) {
    const Bits ba = check_qubit(a), bb = check_qubit(b);
    if (ba == bb) return;
    for (Bits i = 0; i < static_cast<Bits>(dim()); ++i)
      if ((i & ba) && !(i & bb))
        std::swap(amp_(static_cast<Eigen::Index>(i)), amp_(static_cast<Eigen::Index>((i ^ ba) | bb)));
  }

  /// exp(-i theta P) = cos(theta) I - i sin(theta) P, applied in place.
  void apply_pauli_exponential(const PauliString& p, double theta) {
    if (p.n != n_) throw DimensionError("Pauli string does not match register");
    apply_pauli_exponential(amp_, p, theta);
  }

  /// Same on an arbitrary segment holding a p.n-qubit register.
  template <class Vec>
  static void apply_pauli_exponential(Vec&& v, const PauliString& p, double theta) {
    const cplx c = std::cos(theta);
    const cplx base = -kI * std::sin(theta) * detail::i_power(p.y_count());
    const Bits d = Bits{1} << p.n;
    if (p.x == 0) {
      for (Bits b = 0; b < d; ++b) v(static_cast<Eigen::Index>(b)) *= c + base * parity_sign(b & p.z);
      return;
    }
    // Pairs (b, b ^ x) mix among themselves.
    const Bits lead = Bits{1} << (63 - std::countl_zero(p.x));
    for (Bits b = 0; b < d; ++b) {
      if (b & lead) continue;
      const Bits bp = b ^ p.x;
      const auto i0 = static_cast<Eigen::Index>(b), i1 = static_cast<Eigen::Index>(bp);
      const cplx a0 = v(i0), a1 = v(i1);
      // (P v)(bp) = amp(b) v(b), (P v)(b) = amp(bp) v(bp)
      v(i0) = c * a0 + base * parity_sign(bp & p.z) * a1;
      v(i1) = c * a1 + base * parity_sign(b & p.z) * a0;
    }
  }

  /// Probabilities |amplitude|^2.
  Eigen::VectorXd probabilities() const { return amp_.cwiseAbs2(); }

  /// Samples a computational-basis outcome.
  Bits sample_z(SplitMix64& rng) const {
    double r = rng.uniform() * amp_.squaredNorm();
    for (Eigen::Index i = 0; i < dim(); ++i) {
      r -= std::norm(amp_(i));
      if (r < 0.0) return static_cast<Bits>(i);
    }
    // Rounding: return the last nonzero amplitude.
    for (Eigen::Index i = dim() - 1; i >= 0; --i)
      if (amp_(i) != cplx{}) return static_cast<Bits>(i);
    return 0;
  }

  nlohmann::json to_json() const {
    nlohmann::json amps = nlohmann::json::array();
    for (Eigen::Index i = 0; i < dim(); ++i) amps.push_back({amp_(i).real(), amp_(i).imag()});
    return {{"n_qubits", n_}, {"amplitudes", amps}};
  }

  static Matrix2c gate_h() {
    Matrix2c m;
    const double r = 1.0 / std::sqrt(2.0);
    m << r, r, r, -r;
    return m;
  }
  static Matrix2c gate_s() {
    Matrix2c m;
    m << 1, 0, 0, kI;
    return m;
  }

 private:
  static Eigen::Index dim_for(int n) {
    if (n < 0 || n > 30) throw DimensionError("unsupported qubit count " + std::to_string(n));
    return Eigen::Index{1} << n;
  }
  Bits check_qubit(int q) const {
    if (q < 0 || q >= n_) throw DimensionError("qubit " + std::to_string(q) + " out of range");
    return qubit_bit(n_, q);
  }

  int n_ = 0;
  VectorXc amp_;
};

/// Samples an index of a discrete distribution given by its cumulative sums.
inline int sample_cumulative(const std::vector<double>& cumulative, SplitMix64& rng) {
  const double r = rng.uniform() * cumulative.back();
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), r);
  if (it == cumulative.end()) --it;
  return static_cast<int>(it - cumulative.begin());
}

}  // namespace qegfmc
