#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "qegfmc/clifford.hpp"
#include "qegfmc/common.hpp"
#include "qegfmc/evolution.hpp"
#include "qegfmc/pauli.hpp"
#include "qegfmc/rng.hpp"
#include "qegfmc/state_vector.hpp"

namespace qegfmc {

enum class ShadowPart : std::uint8_t { Real = 0, Imag = 1 };

inline std::string to_string(ShadowPart p) { return p == ShadowPart::Real ? "R" : "I"; }

/// One measurement round: ancilla sign, which ancilla basis was used, the
/// register Clifford and the n-bit register outcome.
struct Snapshot {
  int sign = 1;
  ShadowPart part = ShadowPart::Real;
  CliffordDescription clifford;
  Bits outcome = 0;
};

/// Register states entering the two-branch circuit
/// (|0>|a> + |1>|b>)/sqrt 2. Its shadow estimates the operator |b><a|, so
/// Tr(O |b><a|) = <a|O|b>.
struct BranchStates {
  VectorXc a;
  VectorXc b;
};

/// Branches of the single-state circuit: a = phi, b = exp(i H tdiff) phi.
inline BranchStates fig1_branches(const VectorXc& phi, const Propagator& prop, double tdiff) {
  VectorXc b = phi;
  prop.apply(b, -tdiff);
  return {phi, b};
}

// ---------------------------------------------------------------------------
// Literal circuit simulation
// ---------------------------------------------------------------------------

namespace detail {

inline Snapshot measure_round(StateVector& full, int n, ShadowPart part, CliffordKind ensemble, SplitMix64& rng) {
  if (part == ShadowPart::Imag) full.sdg(0);
  full.h(0);
  Snapshot snap;
  snap.part = part;
  snap.clifford = sample_clifford(ensemble, n, rng);
  apply_clifford(snap.clifford, full, 1);
  const Bits z = full.sample_z(rng);
  snap.sign = (z >> n) & 1 ? -1 : 1;
  snap.outcome = z & ((Bits{1} << n) - 1);
  return snap;
}

}  // namespace detail

/// Runs the ancilla circuit once: H on the ancilla, controlled
/// exp(i H tdiff) on the register, then H (Real) or H S^dagger (Imag) on the
/// ancilla, a random Clifford on the register and a Z measurement of every
/// qubit. The sign is +1 for ancilla outcome 0.
inline Snapshot shadow_round(const VectorXc& phi, const Propagator& prop, double tdiff, ShadowPart part,
                             CliffordKind ensemble, SplitMix64& rng) {
  const int n = prop.n_qubits();
  if (phi.size() != (Eigen::Index{1} << n)) throw DimensionError("state does not match propagator");
  VectorXc amp = VectorXc::Zero(Eigen::Index{1} << (n + 1));
  amp.head(phi.size()) = phi;
  StateVector full(n + 1, amp);
  full.h(0);
  full = controlled_evolve(prop, std::move(full), -tdiff);
  return detail::measure_round(full, n, part, ensemble, rng);
}

/// Same measurement on an explicitly prepared two-branch state.
inline Snapshot two_branch_round(const BranchStates& br, ShadowPart part, CliffordKind ensemble, SplitMix64& rng) {
  const Eigen::Index d = br.a.size();
  if (br.b.size() != d) throw DimensionError("branch states differ in size");
  const int n = static_cast<int>(std::lround(std::log2(static_cast<double>(d))));
  VectorXc amp(2 * d);
  amp << br.a / std::sqrt(2.0), br.b / std::sqrt(2.0);
  StateVector full(n + 1, amp);
  return detail::measure_round(full, n, part, ensemble, rng);
}

// ---------------------------------------------------------------------------
// Inverse channels
// ---------------------------------------------------------------------------

/// Applies C^dagger to an n-qubit register.
inline void apply_clifford_adjoint(const CliffordDescription& c, StateVector& v) {
  if (c.kind == CliffordKind::LocalProduct) {
    const auto& table = local_clifford_table();
    for (int q = 0; q < c.n; ++q) v.apply(table[c.local[static_cast<std::size_t>(q)]].u.adjoint(), q);
    return;
  }
  for (auto it = c.gates.rbegin(); it != c.gates.rend(); ++it) apply_gate(v, inverse(*it));
}

/// Dense M^-1 of a snapshot (without the ancilla sign).
inline MatrixXc inverse_channel(const Snapshot& s) {
  const int n = s.clifford.n;
  if (n > 12) throw DimensionError("dense inverse channel supports at most 12 qubits");
  const Eigen::Index d = Eigen::Index{1} << n;
  if (s.clifford.kind == CliffordKind::LocalProduct) {
    const auto& table = local_clifford_table();
    MatrixXc out = MatrixXc::Identity(1, 1);
    for (int q = 0; q < n; ++q) {
      const auto& c = table[s.clifford.local[static_cast<std::size_t>(q)]];
      Eigen::Vector2cd ket = c.u.adjoint().col(test_qubit(s.outcome, n, q) ? 1 : 0);
      const Matrix2c rho = 3.0 * ket * ket.adjoint() - Matrix2c::Identity();
      MatrixXc next(out.rows() * 2, out.cols() * 2);
      for (Eigen::Index r = 0; r < out.rows(); ++r)
        for (Eigen::Index k = 0; k < out.cols(); ++k) next.block(2 * r, 2 * k, 2, 2) = out(r, k) * rho;
      out = next;
    }
    return out;
  }
  // C^dagger |z><z| C
  StateVector back = StateVector::basis(n, s.outcome);
  apply_clifford_adjoint(s.clifford, back);
  return static_cast<double>(d + 1) * back.amplitudes() * back.amplitudes().adjoint() - MatrixXc::Identity(d, d);
}

/// Per-qubit code of a local snapshot: 2*basis + (eigenvalue sign < 0), with
/// basis 0 = X, 1 = Y, 2 = Z. The inverted snapshot on that qubit is
/// (I + 3 s sigma_basis)/2.
inline int local_code(std::uint8_t clifford_index, bool outcome_bit) {
  const auto& c = local_clifford_table()[clifford_index];
  const int s = c.measured_sign * (outcome_bit ? -1 : 1);
  return 2 * c.measured_basis + (s < 0 ? 1 : 0);
}

/// Base-6 key of a local snapshot, qubit 0 the most significant digit.
inline std::uint64_t local_key(const Snapshot& s) {
  std::uint64_t key = 0;
  for (int q = 0; q < s.clifford.n; ++q)
    key = key * 6 + static_cast<std::uint64_t>(local_code(s.clifford.local[static_cast<std::size_t>(q)],
                                                          test_qubit(s.outcome, s.clifford.n, q)));
  return key;
}

/// Tr(P M^-1(snapshot)) for one Pauli string.
inline double snapshot_pauli_value(const Snapshot& s, const PauliString& p) {
  const int n = s.clifford.n;
  if (s.clifford.kind == CliffordKind::LocalProduct) {
    double v = 1.0;
    for (int q = 0; q < n; ++q) {
      const char l = p.letter(q);
      if (l == 'I') continue;
      const int code = local_code(s.clifford.local[static_cast<std::size_t>(q)], test_qubit(s.outcome, n, q));
      if ("XYZ"[code / 2] != l) return 0.0;
      v *= (code & 1) ? -3.0 : 3.0;
    }
    return v;
  }
  const double dim = std::ldexp(1.0, n);
  if (p.is_identity()) return 1.0;
  // (2^n + 1) <z| C P C^dagger |z>; only Z-type images have diagonal entries.
  const auto [sign, q] = s.clifford.conjugate(p);
  if (q.x != 0) return 0.0;
  return (dim + 1.0) * sign * parity_sign(q.z & s.outcome);
}

inline cplx snapshot_value(const Snapshot& s, const PauliOperator& obs) {
  cplx v = 0.0;
  for (const auto& [p, c] : obs.terms()) v += c * snapshot_pauli_value(s, p);
  return v;
}

// ---------------------------------------------------------------------------
// Accumulated estimates
// ---------------------------------------------------------------------------

/// Sign-weighted counts of local snapshots keyed by local_key.
class LocalTally {
 public:
  static constexpr int kDenseLimit = 8;

  explicit LocalTally(int n = 0) : n_(n) {
    if (n_ <= kDenseLimit) {
      std::size_t size = 1;
      for (int q = 0; q < n_; ++q) size *= 6;
      signed_.assign(size, 0.0);
      counts_.assign(size, 0.0);
    }
  }

  int n_qubits() const { return n_; }
  bool dense() const { return n_ <= kDenseLimit; }

  void add(std::uint64_t key, double sign, double weight = 1.0) {
    if (dense()) {
      signed_[key] += sign * weight;
      counts_[key] += weight;
    } else {
      auto& e = sparse_[key];
      e.first += sign * weight;
      e.second += weight;
    }
  }

  /// this += scale * other (signed part only is scaled; counts add |scale|).
  void accumulate(const LocalTally& other, double scale) {
    other.for_each([&](std::uint64_t key, double s, double c) {
      if (dense()) {
        signed_[key] += scale * s;
        counts_[key] += std::abs(scale) * c;
      } else {
        auto& e = sparse_[key];
        e.first += scale * s;
        e.second += std::abs(scale) * c;
      }
    });
  }

  template <class F>
  void for_each(F&& f) const {
    if (dense()) {
      for (std::size_t k = 0; k < signed_.size(); ++k)
        if (counts_[k] != 0.0) f(static_cast<std::uint64_t>(k), signed_[k], counts_[k]);
    } else {
      for (const auto& [k, e] : sparse_) f(k, e.first, e.second);
    }
  }

  const std::vector<double>& signed_dense() const { return signed_; }
  const std::vector<double>& counts_dense() const { return counts_; }

 private:
  int n_;
  std::vector<double> signed_, counts_;
  std::unordered_map<std::uint64_t, std::pair<double, double>> sparse_;
};

namespace detail {

/// Contracts axis k of a row-major tensor with matrix m (rows: new axis).
template <class T, class M>
std::vector<T> transform_axis(const std::vector<T>& in, std::vector<int>& dims, int k, const M& m, int out_dim) {
  std::size_t outer = 1, inner = 1;
  for (int q = 0; q < k; ++q) outer *= static_cast<std::size_t>(dims[static_cast<std::size_t>(q)]);
  for (std::size_t q = static_cast<std::size_t>(k) + 1; q < dims.size(); ++q) inner *= static_cast<std::size_t>(dims[q]);
  const int in_dim = dims[static_cast<std::size_t>(k)];
  std::vector<T> out(outer * static_cast<std::size_t>(out_dim) * inner, T{});
  for (std::size_t o = 0; o < outer; ++o)
    for (int a = 0; a < in_dim; ++a) {
      const T* src = &in[(o * static_cast<std::size_t>(in_dim) + static_cast<std::size_t>(a)) * inner];
      for (int b = 0; b < out_dim; ++b) {
        const double w = m(b, a);
        if (w == 0.0) continue;
        T* dst = &out[(o * static_cast<std::size_t>(out_dim) + static_cast<std::size_t>(b)) * inner];
        for (std::size_t i = 0; i < inner; ++i) dst[i] += w * src[i];
      }
    }
  dims[static_cast<std::size_t>(k)] = out_dim;
  return out;
}

/// Tr(sigma_letter rho_code) for letter 0..3 = I, X, Y, Z and code 0..5.
inline double letter_code_value(int letter, int code) {
  if (letter == 0) return 1.0;
  if (code / 2 != letter - 1) return 0.0;
  return (code & 1) ? -3.0 : 3.0;
}

inline int pauli_digit_index(const PauliString& p) {
  int idx = 0;
  for (int q = 0; q < p.n; ++q) {
    const char l = p.letter(q);
    idx = idx * 4 + (l == 'I' ? 0 : l == 'X' ? 1 : l == 'Y' ? 2 : 3);
  }
  return idx;
}

inline PauliString pauli_from_digit_index(int n, int idx) {
  PauliString p{n, 0, 0};
  for (int q = n - 1; q >= 0; --q) {
    const int l = idx % 4;
    idx /= 4;
    const Bits b = qubit_bit(n, q);
    if (l == 1 || l == 2) p.x |= b;
    if (l == 2 || l == 3) p.z |= b;
  }
  return p;
}

}  // namespace detail

/// Sum over the tally of sign * Tr(P M^-1) for every Pauli P, indexed by
/// base-4 digits (0 = I, 1 = X, 2 = Y, 3 = Z) with qubit 0 most significant.
inline std::vector<double> pauli_moments(const LocalTally& t) {
  if (!t.dense()) throw DimensionError("dense Pauli moments need at most 8 qubits");
  const int n = t.n_qubits();
  std::vector<int> dims(static_cast<std::size_t>(n), 6);
  std::vector<double> a = t.signed_dense();
  Eigen::Matrix<double, 4, 6> m;
  for (int l = 0; l < 4; ++l)
    for (int c = 0; c < 6; ++c) m(l, c) = detail::letter_code_value(l, c);
  for (int k = 0; k < n; ++k) a = detail::transform_axis(a, dims, k, m, 4);
  return a;
}

/// Per-key Tr(O M^-1) for every local key, from the Pauli coefficients of O.
inline std::vector<cplx> observable_on_keys(const PauliOperator& obs) {
  const int n = obs.n_qubits();
  std::size_t size4 = 1;
  for (int q = 0; q < n; ++q) size4 *= 4;
  std::vector<cplx> alpha(size4, cplx{});
  for (const auto& [p, c] : obs.terms()) alpha[static_cast<std::size_t>(detail::pauli_digit_index(p))] += c;
  std::vector<int> dims(static_cast<std::size_t>(n), 4);
  Eigen::Matrix<double, 6, 4> m;
  for (int c = 0; c < 6; ++c)
    for (int l = 0; l < 4; ++l) m(c, l) = detail::letter_code_value(l, c);
  for (int k = 0; k < n; ++k) alpha = detail::transform_axis(alpha, dims, k, m, 6);
  return alpha;
}

/// Pauli-basis form of Tr(O M^-1) evaluated for a local key directly.
inline cplx observable_on_key(const PauliOperator& obs, std::uint64_t key) {
  const int n = obs.n_qubits();
  std::vector<int> codes(static_cast<std::size_t>(n));
  for (int q = n - 1; q >= 0; --q) {
    codes[static_cast<std::size_t>(q)] = static_cast<int>(key % 6);
    key /= 6;
  }
  cplx total = 0.0;
  for (const auto& [p, c] : obs.terms()) {
    double v = 1.0;
    for (int q = 0; q < n && v != 0.0; ++q) {
      const char l = p.letter(q);
      const int li = l == 'I' ? 0 : l == 'X' ? 1 : l == 'Y' ? 2 : 3;
      v *= detail::letter_code_value(li, codes[static_cast<std::size_t>(q)]);
    }
    total += c * v;
  }
  return total;
}

/// Shadow of the operator |b><a| for one (i, j) pair: Real and Imag parts
/// with equal shot counts.
struct ShadowEstimate {
  int i = 0, j = 0;
  int n = 0;
  CliffordKind ensemble = CliffordKind::LocalProduct;
  long shots = 0;  // per part
  std::array<LocalTally, 2> tally;
  std::array<long, 2> part_shots{0, 0};
  std::vector<Snapshot> snapshots;  // always kept for the global ensemble
  bool keep_snapshots = false;

  ShadowEstimate() = default;
  ShadowEstimate(int i_, int j_, int n_qubits, CliffordKind kind, bool keep = false)
      : i(i_), j(j_), n(n_qubits), ensemble(kind), tally{LocalTally(n_qubits), LocalTally(n_qubits)},
        keep_snapshots(keep || kind == CliffordKind::Global) {}

  void add(const Snapshot& s) {
    if (s.clifford.n != n || s.clifford.kind != ensemble) throw DimensionError("snapshot does not match estimate");
    const auto part = static_cast<std::size_t>(s.part);
    ++part_shots[part];
    shots = std::min(part_shots[0], part_shots[1]);
    if (ensemble == CliffordKind::LocalProduct) tally[part].add(local_key(s), s.sign);
    if (keep_snapshots) snapshots.push_back(s);
  }

  void add_local(ShadowPart part, std::uint64_t key, int sign) {
    const auto p = static_cast<std::size_t>(part);
    ++part_shots[p];
    shots = std::min(part_shots[0], part_shots[1]);
    tally[p].add(key, sign);
  }
};

struct ComplexEstimate {
  cplx value;
  double stderr_real = 0.0;
  double stderr_imag = 0.0;
  double stderr() const { return std::hypot(stderr_real, stderr_imag); }
};

/// Mean of sign * Tr(O M^-1) over Real rounds plus i times the same over
/// Imag rounds: an estimate of Tr(O |b><a|) = <a|O|b>.
inline ComplexEstimate estimate_offdiagonal(const ShadowEstimate& est, const PauliOperator& obs) {
  if (est.part_shots[0] == 0 || est.part_shots[1] == 0) throw NumericalError("empty shadow estimate");
  if (obs.n_qubits() != est.n) throw DimensionError("observable does not match shadow register");
  std::array<cplx, 2> mean{};
  std::array<double, 2> second{};
  if (est.ensemble == CliffordKind::LocalProduct) {
    const bool dense = est.tally[0].dense() && obs.size() > 4;
    const std::vector<cplx> on_keys = dense ? observable_on_keys(obs) : std::vector<cplx>{};
    for (std::size_t part = 0; part < 2; ++part) {
      est.tally[part].for_each([&](std::uint64_t key, double s, double c) {
        const cplx f = dense ? on_keys[key] : observable_on_key(obs, key);
        mean[part] += s * f;
        second[part] += c * std::norm(f);
      });
    }
  } else {
    for (const auto& s : est.snapshots) {
      const cplx f = snapshot_value(s, obs);
      mean[static_cast<std::size_t>(s.part)] += static_cast<double>(s.sign) * f;
      second[static_cast<std::size_t>(s.part)] += std::norm(f);
    }
  }
  ComplexEstimate out;
  std::array<double, 2> se{};
  for (std::size_t part = 0; part < 2; ++part) {
    const double n = static_cast<double>(est.part_shots[part]);
    mean[part] /= n;
    const double var = std::max(0.0, second[part] / n - std::norm(mean[part]));
    se[part] = n > 1 ? std::sqrt(var / (n - 1)) : 0.0;
  }
  out.value = mean[0] + kI * mean[1];
  // For Hermitian O the Real rounds fix Re(value) and the Imag rounds Im(value).
  out.stderr_real = se[0];
  out.stderr_imag = se[1];
  return out;
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

/// Receives every round when archiving.
using SnapshotSink = std::function<void(int i, int j, const Snapshot&)>;

struct ShadowSettings {
  long shots = 1000;  // per part
  CliffordKind ensemble = CliffordKind::LocalProduct;
  std::uint64_t seed = 1;
  bool keep_snapshots = false;
  SnapshotSink sink;
};

namespace detail {

/// Basis-change gates R with R^dagger Z R = sigma_b.
inline void rotate_to_basis(VectorXc& v, int n, int q, int basis) {
  StateVector tmp(n, std::move(v));
  if (basis == 0) {
    tmp.h(q);
  } else if (basis == 1) {
    tmp.sdg(q);
    tmp.h(q);
  }
  v = std::move(tmp.amplitudes());
}

/// Cached outcome distributions of the two-branch state per local basis
/// setting. Sampling a uniformly random local Clifford only matters through
/// the measured basis of each qubit, so one distribution per setting serves
/// every Clifford that shares it.
class LocalBranchSampler {
 public:
  LocalBranchSampler(const BranchStates& br, ShadowPart part, int n) : n_(n) {
    const cplx phase = part == ShadowPart::Imag ? -kI : cplx{1.0};
    u0_ = 0.5 * (br.a + phase * br.b);
    u1_ = 0.5 * (br.a - phase * br.b);
    std::size_t settings = 1;
    for (int q = 0; q < n; ++q) settings *= 3;
    cache_.resize(settings);
  }

  /// Returns (ancilla bit, register bits measured in the rotated bases).
  std::pair<int, Bits> sample(std::size_t setting, double r) {
    auto& cum = cache_[setting];
    if (cum.empty()) cum = build(setting);
    const double x = r * cum.back();
    auto it = std::upper_bound(cum.begin(), cum.end(), x);
    if (it == cum.end()) --it;
    const auto idx = static_cast<Bits>(it - cum.begin());
    return {static_cast<int>(idx >> n_), idx & ((Bits{1} << n_) - 1)};
  }

 private:
  std::vector<double> build(std::size_t setting) const {
    VectorXc v0 = u0_, v1 = u1_;
    std::size_t s = setting;
    for (int q = n_ - 1; q >= 0; --q) {
      const int basis = static_cast<int>(s % 3);
      s /= 3;
      if (basis == 2) continue;
      rotate_to_basis(v0, n_, q, basis);
      rotate_to_basis(v1, n_, q, basis);
    }
    std::vector<double> cum(static_cast<std::size_t>(2 * v0.size()));
    double acc = 0.0;
    for (Eigen::Index k = 0; k < v0.size(); ++k) cum[static_cast<std::size_t>(k)] = (acc += std::norm(v0(k)));
    for (Eigen::Index k = 0; k < v1.size(); ++k)
      cum[static_cast<std::size_t>(v0.size() + k)] = (acc += std::norm(v1(k)));
    return cum;
  }

  int n_;
  VectorXc u0_, u1_;
  std::vector<std::vector<double>> cache_;
};

}  // namespace detail

/// Shadow of |b><a| from `settings.shots` rounds per part. Each round draws
/// from its own substream keyed by (seed, i, j, part, round), so results do
/// not depend on scheduling.
inline ShadowEstimate run_shadow(const BranchStates& br, int i, int j, const ShadowSettings& settings) {
  const Eigen::Index d = br.a.size();
  const int n = static_cast<int>(std::lround(std::log2(static_cast<double>(d))));
  if (d != (Eigen::Index{1} << n) || br.b.size() != d) throw DimensionError("branch states are not n-qubit vectors");
  if (settings.shots <= 0) throw ConfigError("shadow shot count must be positive");
  ShadowEstimate est(i, j, n, settings.ensemble, settings.keep_snapshots || static_cast<bool>(settings.sink));
  const auto& table = local_clifford_table();
  for (ShadowPart part : {ShadowPart::Real, ShadowPart::Imag}) {
    if (settings.ensemble == CliffordKind::LocalProduct) {
      detail::LocalBranchSampler sampler(br, part, n);
      for (long r = 0; r < settings.shots; ++r) {
        SplitMix64 rng(substream_seed(settings.seed, {static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j),
                                                      static_cast<std::uint64_t>(part), static_cast<std::uint64_t>(r)}));
        Snapshot snap;
        snap.part = part;
        snap.clifford = {CliffordKind::LocalProduct, n, std::vector<std::uint8_t>(static_cast<std::size_t>(n)), {}};
        std::size_t setting = 0;
        for (int q = 0; q < n; ++q) {
          const auto c = static_cast<std::uint8_t>(rng.below(kLocalCliffordCount));
          snap.clifford.local[static_cast<std::size_t>(q)] = c;
          setting = setting * 3 + static_cast<std::size_t>(table[c].measured_basis);
        }
        const auto [anc, rotated] = sampler.sample(setting, rng.uniform());
        snap.sign = anc ? -1 : 1;
        // Outcome in the Clifford's own frame: flip where its Z maps to -sigma.
        Bits outcome = rotated;
        for (int q = 0; q < n; ++q)
          if (table[snap.clifford.local[static_cast<std::size_t>(q)]].measured_sign < 0) outcome ^= qubit_bit(n, q);
        snap.outcome = outcome;
        if (est.keep_snapshots) {
          est.add(snap);
        } else {
          std::uint64_t key = 0;
          for (int q = 0; q < n; ++q)
            key = key * 6 + static_cast<std::uint64_t>(2 * table[snap.clifford.local[static_cast<std::size_t>(q)]].measured_basis +
                                                       (test_qubit(rotated, n, q) ? 1 : 0));
          est.add_local(part, key, snap.sign);
        }
        if (settings.sink) settings.sink(i, j, snap);
      }
    } else {
      for (long r = 0; r < settings.shots; ++r) {
        SplitMix64 rng(substream_seed(settings.seed, {static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j),
                                                      static_cast<std::uint64_t>(part), static_cast<std::uint64_t>(r)}));
        const Snapshot snap = two_branch_round(br, part, settings.ensemble, rng);
        est.add(snap);
        if (settings.sink) settings.sink(i, j, snap);
      }
    }
  }
  return est;
}

// ---------------------------------------------------------------------------
// Reconstructed operators applied to vectors
// ---------------------------------------------------------------------------

/// Weighted combination of shadow estimates, sum_k w_k * (mean inverted
/// snapshot of part_k), applied to a state vector. Local-ensemble terms are
/// merged into a single tally first.
class ShadowOperator {
 public:
  explicit ShadowOperator(int n) : n_(n), merged_(n) {}

  /// Adds weight * (sign-averaged M^-1 over the given part of est).
  void add(const ShadowEstimate& est, ShadowPart part, double weight) {
    if (est.n != n_) throw DimensionError("shadow estimate does not match register");
    const auto p = static_cast<std::size_t>(part);
    if (est.part_shots[p] == 0 || weight == 0.0) return;
    const double w = weight / static_cast<double>(est.part_shots[p]);
    if (est.ensemble == CliffordKind::LocalProduct) {
      merged_.accumulate(est.tally[p], w);
    } else {
      for (const auto& s : est.snapshots)
        if (s.part == part) global_.push_back({s, w * s.sign});
    }
  }

  /// (sum of weighted inverted snapshots) * v.
  VectorXc apply(const VectorXc& v) const {
    const Eigen::Index d = Eigen::Index{1} << n_;
    if (v.size() != d) throw DimensionError("vector does not match shadow register");
    VectorXc out = VectorXc::Zero(d);
    if (merged_.dense()) {
      const auto moments = pauli_moments(merged_);
      const double scale = std::ldexp(1.0, -n_);
      for (std::size_t idx = 0; idx < moments.size(); ++idx) {
        if (std::abs(moments[idx]) < 1e-15) continue;
        const PauliString p = detail::pauli_from_digit_index(n_, static_cast<int>(idx));
        const cplx c = scale * moments[idx] * detail::i_power(p.y_count());
        for (Bits b = 0; b < static_cast<Bits>(d); ++b)
          out(static_cast<Eigen::Index>(b ^ p.x)) += c * parity_sign(b & p.z) * v(static_cast<Eigen::Index>(b));
      }
    } else {
      merged_.for_each([&](std::uint64_t key, double s, double) {
        if (s == 0.0) return;
        // Product of single-qubit (I + 3 s sigma)/2 factors applied qubit by qubit.
        VectorXc w = v;
        std::uint64_t k = key;
        for (int q = n_ - 1; q >= 0; --q) {
          const int code = static_cast<int>(k % 6);
          k /= 6;
          const PauliString p = PauliString::single(n_, q, "XYZ"[code / 2]);
          const VectorXc sw = pauli_apply(PauliOperator(p, 1.0), w);
          w = 0.5 * w + ((code & 1) ? -1.5 : 1.5) * sw;
        }
        out += s * w;
      });
    }
    for (const auto& [snap, w] : global_) {
      StateVector cv(n_, v);
      apply_clifford(snap.clifford, cv);
      const cplx amp = cv[snap.outcome];
      StateVector back = StateVector::basis(n_, snap.outcome);
      apply_clifford_adjoint(snap.clifford, back);
      out += w * (std::ldexp(1.0, n_) + 1.0) * amp * back.amplitudes() - w * v;
    }
    return out;
  }

 private:
  int n_;
  LocalTally merged_;
  std::vector<std::pair<Snapshot, double>> global_;
};

// ---------------------------------------------------------------------------
// Variance accounting
// ---------------------------------------------------------------------------

/// Upper bound on the squared shadow norm of obs. Local ensemble: the
/// triangle inequality over Pauli terms with ||P||_shadow = 3^{w/2}.
/// Global ensemble: sqrt(3 Tr(O_0^2)) for the traceless part plus |c_I|.
inline double shadow_norm_bound(const PauliOperator& obs, CliffordKind ensemble) {
  if (ensemble == CliffordKind::LocalProduct) {
    double s = 0.0;
    for (const auto& [p, c] : obs.terms()) s += std::abs(c) * std::pow(3.0, 0.5 * p.weight());
    return s * s;
  }
  double traceless = 0.0;
  for (const auto& [p, c] : obs.terms())
    if (!p.is_identity()) traceless += std::norm(c);
  const double tr_o0_sq = std::ldexp(traceless, obs.n_qubits());
  const double b = std::sqrt(3.0 * tr_o0_sq) + std::abs(obs.trace_part());
  return b * b;
}

/// Bound on E|estimate - exact|^2 for an N-shot (per part) off-diagonal estimate.
inline double variance_bound(const PauliOperator& obs, long shots, CliffordKind ensemble = CliffordKind::LocalProduct) {
  return 2.0 * shadow_norm_bound(obs, ensemble) / static_cast<double>(shots);
}

// ---------------------------------------------------------------------------
// Archive
// ---------------------------------------------------------------------------

inline nlohmann::json snapshot_to_json(int i, int j, const Snapshot& s) {
  return {{"pair", {i, j}}, {"part", to_string(s.part)}, {"sign", s.sign},
          {"clifford", s.clifford.to_json()}, {"outcome", to_bitstring(s.outcome, s.clifford.n)}};
}

/// JSON-lines archive writer usable as a SnapshotSink.
class SnapshotArchive {
 public:
  explicit SnapshotArchive(const std::string& path) : out_(path) {
    if (!out_) throw ConfigError("cannot open snapshot archive '" + path + "'");
  }
  void write(int i, int j, const Snapshot& s) { out_ << snapshot_to_json(i, j, s).dump() << '\n'; }
  SnapshotSink sink() {
    return [this](int i, int j, const Snapshot& s) { write(i, j, s); };
  }

 private:
  std::ofstream out_;
};

struct ArchivedSnapshot {
  int i = 0, j = 0;
  Snapshot snapshot;
};

inline std::vector<ArchivedSnapshot> read_snapshot_archive(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open snapshot archive '" + path + "'", 0);
  std::vector<ArchivedSnapshot> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      ArchivedSnapshot a;
      a.i = j.at("pair").at(0).get<int>();
      a.j = j.at("pair").at(1).get<int>();
      const std::string bits = j.at("outcome").get<std::string>();
      a.snapshot.part = j.at("part").get<std::string>() == "I" ? ShadowPart::Imag : ShadowPart::Real;
      a.snapshot.sign = j.at("sign").get<int>();
      a.snapshot.outcome = from_bitstring(bits);
      a.snapshot.clifford = CliffordDescription::from_json(j.at("clifford"), static_cast<int>(bits.size()));
      out.push_back(std::move(a));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("malformed archive record: ") + e.what(), lineno);
    }
  }
  return out;
}

}  // namespace qegfmc
