#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "qegfmc/common.hpp"
#include "qegfmc/pauli.hpp"
#include "qegfmc/rng.hpp"
#include "qegfmc/state_vector.hpp"

namespace qegfmc {

// ---------------------------------------------------------------------------
// Single-qubit Clifford group
// ---------------------------------------------------------------------------

/// Pauli letter codes used by the tables: 0 = X, 1 = Y, 2 = Z.
inline constexpr char kPauliLetters[3] = {'X', 'Y', 'Z'};

struct LocalClifford {
  Matrix2c u;
  std::string word;  // H/S word, leftmost gate applied first
  /// u^dagger Z u = measured_sign * sigma_{measured_basis}
  int measured_basis = 2;
  int measured_sign = 1;
  /// u sigma_a u^dagger = image_sign[a] * sigma_{image[a]}
  std::array<int, 3> image{};
  std::array<int, 3> image_sign{};
};

namespace detail {

inline std::array<Matrix2c, 3> pauli_matrices() {
  Matrix2c x, y, z;
  x << 0, 1, 1, 0;
  y << 0, -kI, kI, 0;
  z << 1, 0, 0, -1;
  return {x, y, z};
}

inline std::pair<int, int> identify_pauli(const Matrix2c& m) {
  const auto s = pauli_matrices();
  for (int a = 0; a < 3; ++a) {
    if ((m - s[static_cast<std::size_t>(a)]).norm() < 1e-9) return {a, 1};
    if ((m + s[static_cast<std::size_t>(a)]).norm() < 1e-9) return {a, -1};
  }
  throw NumericalError("matrix is not a signed Pauli");
}

inline bool equal_up_to_phase(const Matrix2c& a, const Matrix2c& b) {
  const cplx overlap = (a.adjoint() * b).trace() / 2.0;
  return std::abs(std::abs(overlap) - 1.0) < 1e-9;
}

}  // namespace detail

/// The 24 single-qubit Cliffords modulo phase, generated by H and S words.
inline const std::vector<LocalClifford>& local_clifford_table() {
  static const std::vector<LocalClifford> table = [] {
    std::vector<LocalClifford> out;
    std::vector<std::pair<Matrix2c, std::string>> frontier{{Matrix2c::Identity(), ""}};
    auto known = [&](const Matrix2c& m) {
      for (const auto& c : out)
        if (detail::equal_up_to_phase(c.u, m)) return true;
      return false;
    };
    while (!frontier.empty()) {
      std::vector<std::pair<Matrix2c, std::string>> next;
      for (auto& [m, w] : frontier) {
        if (known(m)) continue;
        LocalClifford c;
        c.u = m;
        c.word = w;
        out.push_back(c);
        next.push_back({StateVector::gate_h() * m, w + "H"});
        next.push_back({StateVector::gate_s() * m, w + "S"});
      }
      frontier = std::move(next);
    }
    const auto sigma = detail::pauli_matrices();
    for (auto& c : out) {
      std::tie(c.measured_basis, c.measured_sign) = detail::identify_pauli(c.u.adjoint() * sigma[2] * c.u);
      for (int a = 0; a < 3; ++a) {
        const auto [img, sgn] = detail::identify_pauli(c.u * sigma[static_cast<std::size_t>(a)] * c.u.adjoint());
        c.image[static_cast<std::size_t>(a)] = img;
        c.image_sign[static_cast<std::size_t>(a)] = sgn;
      }
    }
    return out;
  }();
  return table;
}

inline constexpr int kLocalCliffordCount = 24;

// ---------------------------------------------------------------------------
// Gate circuits and signed Pauli conjugation
// ---------------------------------------------------------------------------

enum class GateKind : std::uint8_t { H, S, Sdg, X, Z, CNOT, SWAP };

struct Gate {
  GateKind kind;
  int a = 0;
  int b = -1;

  friend bool operator==(const Gate&, const Gate&) = default;
};

inline Gate inverse(Gate g) {
  if (g.kind == GateKind::S) g.kind = GateKind::Sdg;
  else if (g.kind == GateKind::Sdg) g.kind = GateKind::S;
  return g;
}

/// Pauli in letter form (qubit with x and z set is Y) with a sign.
struct SignedPauli {
  PauliString p;
  bool negative = false;

  /// g P g^dagger, using the stabilizer-tableau update rules.
  void conjugate(const Gate& g) {
    const Bits ba = qubit_bit(p.n, g.a);
    auto bit = [](Bits m, Bits b) { return (m & b) != 0; };
    auto set = [](Bits& m, Bits b, bool v) { m = v ? (m | b) : (m & ~b); };
    const bool xa = bit(p.x, ba), za = bit(p.z, ba);
    switch (g.kind) {
      case GateKind::H:
        negative ^= xa && za;
        set(p.x, ba, za);
        set(p.z, ba, xa);
        break;
      case GateKind::S:
        negative ^= xa && za;
        set(p.z, ba, za ^ xa);
        break;
      case GateKind::Sdg:
        negative ^= xa && !za;
        set(p.z, ba, za ^ xa);
        break;
      case GateKind::X: negative ^= za; break;
      case GateKind::Z: negative ^= xa; break;
      case GateKind::CNOT: {
        const Bits bt = qubit_bit(p.n, g.b);
        const bool xt = bit(p.x, bt), zt = bit(p.z, bt);
        negative ^= xa && zt && !(xt ^ za);
        set(p.x, bt, xt ^ xa);
        set(p.z, ba, za ^ zt);
        break;
      }
      case GateKind::SWAP: {
        const Bits bt = qubit_bit(p.n, g.b);
        const bool xt = bit(p.x, bt), zt = bit(p.z, bt);
        set(p.x, ba, xt);
        set(p.z, ba, zt);
        set(p.x, bt, xa);
        set(p.z, bt, za);
        break;
      }
    }
  }

  /// Coefficient when written as i^{#Y} X^x Z^z (the PauliString operator).
  double sign() const { return negative ? -1.0 : 1.0; }
};

inline void apply_gate(StateVector& v, const Gate& g, int offset = 0) {
  switch (g.kind) {
    case GateKind::H: v.h(g.a + offset); break;
    case GateKind::S: v.s(g.a + offset); break;
    case GateKind::Sdg: v.sdg(g.a + offset); break;
    case GateKind::X: v.x(g.a + offset); break;
    case GateKind::Z: v.z(g.a + offset); break;
    case GateKind::CNOT: v.cnot(g.a + offset, g.b + offset); break;
    case GateKind::SWAP: v.swap(g.a + offset, g.b + offset); break;
  }
}

inline std::string to_string(GateKind k) {
  switch (k) {
    case GateKind::H: return "H";
    case GateKind::S: return "S";
    case GateKind::Sdg: return "Sdg";
    case GateKind::X: return "X";
    case GateKind::Z: return "Z";
    case GateKind::CNOT: return "CNOT";
    case GateKind::SWAP: return "SWAP";
  }
  return "?";
}

inline GateKind parse_gate_kind(const std::string& s) {
  for (GateKind k : {GateKind::H, GateKind::S, GateKind::Sdg, GateKind::X, GateKind::Z, GateKind::CNOT, GateKind::SWAP})
    if (to_string(k) == s) return k;
  throw ParseError("unknown gate '" + s + "'", 0);
}

// ---------------------------------------------------------------------------
// Clifford descriptions
// ---------------------------------------------------------------------------

enum class CliffordKind { LocalProduct, Global };

inline std::string to_string(CliffordKind k) { return k == CliffordKind::LocalProduct ? "local" : "global"; }

inline CliffordKind parse_clifford_kind(const std::string& s) {
  if (s == "local") return CliffordKind::LocalProduct;
  if (s == "global") return CliffordKind::Global;
  throw ConfigError("unknown Clifford ensemble '" + s + "'");
}

/// A local product (one table index per qubit) or an n-qubit Clifford given
/// as a gate circuit in application order.
struct CliffordDescription {
  CliffordKind kind = CliffordKind::LocalProduct;
  int n = 0;
  std::vector<std::uint8_t> local;
  std::vector<Gate> gates;

  static CliffordDescription identity(int n_qubits) {
    return {CliffordKind::LocalProduct, n_qubits, std::vector<std::uint8_t>(static_cast<std::size_t>(n_qubits), 0), {}};
  }

  /// C P C^dagger = sign * Q.
  std::pair<double, PauliString> conjugate(const PauliString& p) const {
    if (p.n != n) throw DimensionError("Pauli string does not match Clifford register");
    if (kind == CliffordKind::LocalProduct) {
      const auto& table = local_clifford_table();
      PauliString out{n, 0, 0};
      double sign = 1.0;
      for (int q = 0; q < n; ++q) {
        const char l = p.letter(q);
        if (l == 'I') continue;
        const int a = l == 'X' ? 0 : l == 'Y' ? 1 : 2;
        const auto& c = table[local[static_cast<std::size_t>(q)]];
        sign *= c.image_sign[static_cast<std::size_t>(a)];
        const int img = c.image[static_cast<std::size_t>(a)];
        const Bits b = qubit_bit(n, q);
        if (img != 2) out.x |= b;
        if (img != 0) out.z |= b;
      }
      return {sign, out};
    }
    SignedPauli sp{p, false};
    for (const Gate& g : gates) sp.conjugate(g);
    return {sp.sign(), sp.p};
  }

  nlohmann::json to_json() const {
    if (kind == CliffordKind::LocalProduct) return {{"kind", "local"}, {"local", local}};
    nlohmann::json g = nlohmann::json::array();
    for (const auto& gate : gates) {
      nlohmann::json j = {to_string(gate.kind), gate.a};
      if (gate.b >= 0) j.push_back(gate.b);
      g.push_back(j);
    }
    return {{"kind", "global"}, {"n", n}, {"gates", g}};
  }

  static CliffordDescription from_json(const nlohmann::json& j, int n_qubits) {
    CliffordDescription c;
    c.n = n_qubits;
    c.kind = parse_clifford_kind(j.at("kind").get<std::string>());
    if (c.kind == CliffordKind::LocalProduct) {
      c.local = j.at("local").get<std::vector<std::uint8_t>>();
      if (static_cast<int>(c.local.size()) != n_qubits) throw ParseError("local Clifford has wrong length", 0);
    } else {
      for (const auto& g : j.at("gates")) {
        Gate gate{parse_gate_kind(g.at(0).get<std::string>()), g.at(1).get<int>(), -1};
        if (g.size() > 2) gate.b = g.at(2).get<int>();
        c.gates.push_back(gate);
      }
    }
    return c;
  }
};

/// Applies C to the register occupying qubits offset .. offset+n-1 of v.
inline void apply_clifford(const CliffordDescription& c, StateVector& v, int offset = 0) {
  if (offset + c.n > v.n_qubits()) throw DimensionError("Clifford does not fit in the register");
  if (c.kind == CliffordKind::LocalProduct) {
    const auto& table = local_clifford_table();
    for (int q = 0; q < c.n; ++q) v.apply(table[c.local[static_cast<std::size_t>(q)]].u, q + offset);
    return;
  }
  for (const Gate& g : c.gates) apply_gate(v, g, offset);
}

inline CliffordDescription sample_local_clifford(int n, SplitMix64& rng) {
  CliffordDescription c{CliffordKind::LocalProduct, n, {}, {}};
  c.local.resize(static_cast<std::size_t>(n));
  for (auto& k : c.local) k = static_cast<std::uint8_t>(rng.below(kLocalCliffordCount));
  return c;
}

namespace detail {

inline PauliString random_pauli_on(int n, int first, SplitMix64& rng) {
  PauliString p{n, 0, 0};
  for (int q = first; q < n; ++q) {
    const auto r = rng.below(4);
    if (r & 1) p.x |= qubit_bit(n, q);
    if (r & 2) p.z |= qubit_bit(n, q);
  }
  return p;
}

/// Gates on qubits >= k taking (a, b) to (Z_k, X_k) up to signs.
inline std::vector<Gate> disentangle_pair(PauliString a, PauliString b, int k) {
  const int n = a.n;
  std::vector<Gate> gates;
  auto emit = [&](Gate g) {
    gates.push_back(g);
    SignedPauli sa{a}, sb{b};
    sa.conjugate(g);
    sb.conjugate(g);
    a = sa.p;
    b = sb.p;
  };
  // a -> product of X's.
  for (int q = k; q < n; ++q) {
    const char l = a.letter(q);
    if (l == 'Z') emit({GateKind::H, q});
    else if (l == 'Y') emit({GateKind::S, q});
  }
  std::vector<int> support;
  for (int q = k; q < n; ++q)
    if (a.letter(q) == 'X') support.push_back(q);
  for (std::size_t i = 1; i < support.size(); ++i) emit({GateKind::CNOT, support[0], support[i]});
  if (support[0] != k) emit({GateKind::SWAP, support[0], k});
  // a = X_k; b anticommutes, so b_k is Y or Z.
  if (b.letter(k) == 'Y') {
    emit({GateKind::H, k});
    emit({GateKind::S, k});
    emit({GateKind::H, k});
  }
  for (int q = k + 1; q < n; ++q) {
    const char l = b.letter(q);
    if (l == 'X') {
      emit({GateKind::H, q});
    } else if (l == 'Y') {
      emit({GateKind::S, q});
      emit({GateKind::H, q});
    }
  }
  for (int q = k + 1; q < n; ++q)
    if (b.letter(q) == 'Z') emit({GateKind::CNOT, q, k});
  emit({GateKind::H, k});
  return gates;
}

}  // namespace detail

/// Uniformly random n-qubit Clifford. Qubit by qubit, a random anticommuting
/// pair is drawn as the image of (Z_k, X_k); a random Pauli fixes the signs.
inline CliffordDescription sample_global_clifford(int n, SplitMix64& rng) {
  CliffordDescription c{CliffordKind::Global, n, {}, {}};
  std::vector<std::vector<Gate>> layers(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    PauliString a;
    do a = detail::random_pauli_on(n, k, rng);
    while (a.is_identity());
    PauliString b;
    do b = detail::random_pauli_on(n, k, rng);
    while (a.commutes_with(b));
    const auto d = detail::disentangle_pair(a, b, k);
    for (auto it = d.rbegin(); it != d.rend(); ++it) layers[static_cast<std::size_t>(k)].push_back(inverse(*it));
  }
  const PauliString signs = detail::random_pauli_on(n, 0, rng);
  for (int q = 0; q < n; ++q) {
    const char l = signs.letter(q);
    if (l == 'X' || l == 'Y') c.gates.push_back({GateKind::X, q});
    if (l == 'Z' || l == 'Y') c.gates.push_back({GateKind::Z, q});
  }
  for (int k = n - 1; k >= 0; --k)
    c.gates.insert(c.gates.end(), layers[static_cast<std::size_t>(k)].begin(), layers[static_cast<std::size_t>(k)].end());
  return c;
}

inline CliffordDescription sample_clifford(CliffordKind kind, int n, SplitMix64& rng) {
  return kind == CliffordKind::LocalProduct ? sample_local_clifford(n, rng) : sample_global_clifford(n, rng);
}

/// Dense unitary of a Clifford description, for tests and small registers.
inline MatrixXc clifford_matrix(const CliffordDescription& c) {
  const Eigen::Index d = Eigen::Index{1} << c.n;
  MatrixXc m(d, d);
  for (Eigen::Index col = 0; col < d; ++col) {
    StateVector v = StateVector::basis(c.n, static_cast<Bits>(col));
    apply_clifford(c, v);
    m.col(col) = v.amplitudes();
  }
  return m;
}

}  // namespace qegfmc
