#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "qegfmc/clebsch_gordan.hpp"
#include "qegfmc/common.hpp"
#include "qegfmc/fermion.hpp"
#include "qegfmc/sparse_matrix.hpp"

namespace qegfmc {

// ---------------------------------------------------------------------------
// Orbitals
// ---------------------------------------------------------------------------

struct Orbital {
  std::string label;  // e.g. "0d5/2"
  int n = 0;          // radial quantum number
  int l = 0;          // orbital angular momentum
  int j2 = 1;         // twice the total angular momentum

  friend bool operator==(const Orbital&, const Orbital&) = default;
};

inline constexpr std::string_view kOrbitalLetters = "spdfg";

inline std::string orbital_label(int n, int l, int j2) {
  return std::to_string(n) + kOrbitalLetters[static_cast<std::size_t>(l)] + std::to_string(j2) + "/2";
}

/// Parses `<n><l-letter><j2>/2`. Throws ParseError on bad grammar or on an
/// impossible j for the given l.
inline Orbital parse_orbital_label(std::string_view text, int line = 0) {
  const std::string s(text);
  std::size_t pos = 0;
  auto read_int = [&](const char* what) {
    const std::size_t start = pos;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
    if (start == pos) throw ParseError("orbital '" + s + "': expected " + what, line);
    return std::stoi(s.substr(start, pos - start));
  };
  Orbital o;
  o.label = s;
  o.n = read_int("radial quantum number");
  if (pos >= s.size()) throw ParseError("orbital '" + s + "': missing l letter", line);
  const auto l = kOrbitalLetters.find(static_cast<char>(std::tolower(static_cast<unsigned char>(s[pos]))));
  if (l == std::string_view::npos) throw ParseError("orbital '" + s + "': unknown l letter", line);
  o.l = static_cast<int>(l);
  ++pos;
  o.j2 = read_int("2j");
  if (s.compare(pos, std::string::npos, "/2") != 0)
    throw ParseError("orbital '" + s + "': j must be written as <2j>/2", line);
  if (o.j2 < 1 || (o.j2 != 2 * o.l - 1 && o.j2 != 2 * o.l + 1))
    throw ParseError("orbital '" + s + "': j is not l +- 1/2", line);
  o.label = orbital_label(o.n, o.l, o.j2);
  return o;
}

// ---------------------------------------------------------------------------
// Interaction files
// ---------------------------------------------------------------------------

struct TwoBodyMatrixElement {
  int a = 0, b = 0, c = 0, d = 0;  // orbital indices, a <= b, c <= d, (a,b) <= (c,d)
  int J = 0;
  int T = 0;
  double value = 0.0;  // MeV
};

struct InteractionData {
  std::vector<Orbital> orbitals;
  std::vector<double> spe;  // one per orbital, MeV
  std::vector<TwoBodyMatrixElement> tbme;

  int orbital_index(std::string_view label) const {
    for (std::size_t i = 0; i < orbitals.size(); ++i)
      if (orbitals[i].label == label) return static_cast<int>(i);
    return -1;
  }
};

/// Phase relating the coupled pair operators: A+_{JT}(ab) = phase * A+_{JT}(ba).
inline double pair_exchange_phase(int ja2, int jb2, int J, int T) {
  const int exponent = (ja2 + jb2) / 2 - J + T;
  return (exponent % 2 == 0) ? 1.0 : -1.0;
}

/// Reads the SPE/TBME text format. '#' starts a comment.
///   SPE  <label> <energy>
///   TBME <a> <b> <c> <d> <J> <T> <V>
/// TBMEs are stored with a <= b, c <= d and (a,b) <= (c,d); reordering a
/// pair applies the exchange phase.
inline InteractionData parse_interaction(std::istream& in) {
  InteractionData data;
  struct PendingTbme {
    std::array<std::string, 4> labels;
    int J, T;
    double value;
    int line;
  };
  std::vector<PendingTbme> pending;

  auto parse_double = [](const std::string& tok, int line) {
    try {
      std::size_t used = 0;
      double v = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      return v;
    } catch (const std::exception&) {
      throw ParseError("expected a number, got '" + tok + "'", line);
    }
  };
  auto parse_int = [](const std::string& tok, int line) {
    try {
      std::size_t used = 0;
      int v = std::stoi(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      return v;
    } catch (const std::exception&) {
      throw ParseError("expected an integer, got '" + tok + "'", line);
    }
  };

  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    std::istringstream ls(raw);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    if (tok[0] == "SPE") {
      if (tok.size() != 3) throw ParseError("SPE expects: SPE <label> <energy>", line);
      Orbital o = parse_orbital_label(tok[1], line);
      if (data.orbital_index(o.label) >= 0) throw ParseError("duplicate SPE for " + o.label, line);
      data.orbitals.push_back(o);
      data.spe.push_back(parse_double(tok[2], line));
    } else if (tok[0] == "TBME") {
      if (tok.size() != 8) throw ParseError("TBME expects: TBME <a> <b> <c> <d> <J> <T> <V>", line);
      PendingTbme p{{tok[1], tok[2], tok[3], tok[4]}, parse_int(tok[5], line), parse_int(tok[6], line),
                    parse_double(tok[7], line), line};
      pending.push_back(p);
    } else {
      throw ParseError("unknown record '" + tok[0] + "'", line);
    }
  }

  std::set<std::tuple<int, int, int, int, int, int>> seen;
  for (const auto& p : pending) {
    std::array<int, 4> idx{};
    for (int k = 0; k < 4; ++k) {
      const Orbital o = parse_orbital_label(p.labels[static_cast<std::size_t>(k)], p.line);
      idx[static_cast<std::size_t>(k)] = data.orbital_index(o.label);
      if (idx[static_cast<std::size_t>(k)] < 0)
        throw ParseError("TBME references orbital " + o.label + " without an SPE line", p.line);
    }
    auto j2 = [&](int k) { return data.orbitals[static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])].j2; };
    if (p.T != 0 && p.T != 1) throw ParseError("isospin T must be 0 or 1", p.line);
    if (!triangle_ok(j2(0), j2(1), 2 * p.J) || !triangle_ok(j2(2), j2(3), 2 * p.J))
      throw ParseError("J=" + std::to_string(p.J) + " violates the triangle rule", p.line);

    TwoBodyMatrixElement t{idx[0], idx[1], idx[2], idx[3], p.J, p.T, p.value};
    if (t.a > t.b) {
      t.value *= pair_exchange_phase(j2(0), j2(1), t.J, t.T);
      std::swap(t.a, t.b);
    }
    if (t.c > t.d) {
      t.value *= pair_exchange_phase(j2(2), j2(3), t.J, t.T);
      std::swap(t.c, t.d);
    }
    if (std::tie(t.a, t.b) > std::tie(t.c, t.d)) {
      std::swap(t.a, t.c);
      std::swap(t.b, t.d);
    }
    if (!seen.insert({t.a, t.b, t.c, t.d, t.J, t.T}).second)
      throw ParseError("duplicate TBME", p.line);
    data.tbme.push_back(t);
  }
  return data;
}

inline InteractionData parse_interaction_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open interaction file '" + path + "'", 0);
  return parse_interaction(in);
}

/// Keeps only the listed orbitals (in file order) and the TBMEs among them.
inline InteractionData restrict_orbitals(const InteractionData& data,
                                         const std::vector<std::string>& labels) {
  std::vector<int> remap(data.orbitals.size(), -1);
  InteractionData out;
  for (std::size_t i = 0; i < data.orbitals.size(); ++i) {
    const bool keep = std::find(labels.begin(), labels.end(), data.orbitals[i].label) != labels.end();
    if (!keep) continue;
    remap[i] = static_cast<int>(out.orbitals.size());
    out.orbitals.push_back(data.orbitals[i]);
    out.spe.push_back(data.spe[i]);
  }
  for (const auto& l : labels)
    if (out.orbital_index(parse_orbital_label(l).label) < 0)
      throw ConfigError("orbital " + l + " is not defined by the interaction");
  for (auto t : data.tbme) {
    const int a = remap[static_cast<std::size_t>(t.a)], b = remap[static_cast<std::size_t>(t.b)];
    const int c = remap[static_cast<std::size_t>(t.c)], d = remap[static_cast<std::size_t>(t.d)];
    if (a < 0 || b < 0 || c < 0 || d < 0) continue;
    t.a = a, t.b = b, t.c = c, t.d = d;
    out.tbme.push_back(t);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Single-particle states
// ---------------------------------------------------------------------------

enum class Species { Neutron, Proton, Both };

struct IsospinConvention {
  int neutron_tz2 = +1;  // nuclear convention; set to -1 for the particle-physics one
};

struct SingleParticleState {
  int orbital = 0;  // index into InteractionData::orbitals
  int m2 = 0;
  int tz2 = 0;

  friend bool operator==(const SingleParticleState&, const SingleParticleState&) = default;
};

/// Modes of the valence space ordered by (tz2, orbital index, m2). Fermionic
/// signs depend on this order.
inline std::vector<SingleParticleState> single_particle_states(const InteractionData& data,
                                                               Species species = Species::Both,
                                                               IsospinConvention iso = {}) {
  std::vector<int> tz_values;
  if (species != Species::Proton) tz_values.push_back(iso.neutron_tz2);
  if (species != Species::Neutron) tz_values.push_back(-iso.neutron_tz2);
  std::sort(tz_values.begin(), tz_values.end());
  std::vector<SingleParticleState> modes;
  for (int tz2 : tz_values)
    for (std::size_t o = 0; o < data.orbitals.size(); ++o)
      for (int m2 = -data.orbitals[o].j2; m2 <= data.orbitals[o].j2; m2 += 2)
        modes.push_back({static_cast<int>(o), m2, tz2});
  return modes;
}

// ---------------------------------------------------------------------------
// Configuration basis
// ---------------------------------------------------------------------------

struct BasisConstraints {
  std::optional<int> particles;
  std::optional<int> total_m2;
  std::optional<int> total_tz2;
};

class EmptyBasisError : public Error {
 public:
  using Error::Error;
};

/// Sorted occupation bitstrings; mode k is qubit k (see qubit_bit).
class ConfigurationBasis {
 public:
  ConfigurationBasis() = default;
  ConfigurationBasis(int n_modes, std::vector<Bits> states, BasisConstraints constraints)
      : n_modes_(n_modes), states_(std::move(states)), constraints_(constraints) {}

  int n_modes() const { return n_modes_; }
  int size() const { return static_cast<int>(states_.size()); }
  Bits state(int i) const { return states_[static_cast<std::size_t>(i)]; }
  const std::vector<Bits>& states() const { return states_; }
  const BasisConstraints& constraints() const { return constraints_; }

  /// Position of `config` in the basis, or -1.
  int index_of(Bits config) const {
    auto it = std::lower_bound(states_.begin(), states_.end(), config);
    return (it != states_.end() && *it == config) ? static_cast<int>(it - states_.begin()) : -1;
  }

 private:
  int n_modes_ = 0;
  std::vector<Bits> states_;
  BasisConstraints constraints_;
};

inline bool satisfies(Bits config, const std::vector<SingleParticleState>& modes,
                      const BasisConstraints& c) {
  const int n = static_cast<int>(modes.size());
  if (c.particles && popcount(config) != *c.particles) return false;
  int m2 = 0, tz2 = 0;
  for (int k = 0; k < n; ++k) {
    if (!test_qubit(config, n, k)) continue;
    m2 += modes[static_cast<std::size_t>(k)].m2;
    tz2 += modes[static_cast<std::size_t>(k)].tz2;
  }
  if (c.total_m2 && m2 != *c.total_m2) return false;
  if (c.total_tz2 && tz2 != *c.total_tz2) return false;
  return true;
}

/// All occupation bitstrings satisfying the constraints, ascending. Throws
/// EmptyBasisError when none exist.
inline ConfigurationBasis enumerate_basis(const std::vector<SingleParticleState>& modes,
                                          BasisConstraints constraints = {}) {
  const int n = static_cast<int>(modes.size());
  if (n > 62) throw DimensionError("at most 62 single-particle states are supported");
  std::vector<Bits> states;
  auto consider = [&](Bits x) {
    if (satisfies(x, modes, constraints)) states.push_back(x);
  };
  if (constraints.particles) {
    const int k = *constraints.particles;
    if (k < 0 || k > n) throw EmptyBasisError("particle number " + std::to_string(k) + " does not fit in " +
                                              std::to_string(n) + " single-particle states");
    if (k == 0) {
      consider(0);
    } else {
      // Gosper's hack over k-subsets.
      Bits x = (Bits{1} << k) - 1;
      const Bits limit = Bits{1} << n;
      while (x < limit) {
        consider(x);
        const Bits lowest = x & (~x + 1);
        const Bits ripple = x + lowest;
        x = (((ripple ^ x) >> 2) / lowest) | ripple;
      }
    }
  } else {
    for (Bits x = 0; x < (Bits{1} << n); ++x) consider(x);
  }
  std::sort(states.begin(), states.end());
  if (states.empty()) throw EmptyBasisError("no configuration satisfies the requested constraints");
  return ConfigurationBasis(n, std::move(states), constraints);
}

// ---------------------------------------------------------------------------
// Second-quantized Hamiltonian
// ---------------------------------------------------------------------------

struct TwoBodyTerm {
  int p = 0, q = 0, r = 0, s = 0;  // coeff * c+_p c+_q c_s c_r with p < q, r < s
  double coeff = 0.0;
};

struct SecondQuantizedHamiltonian {
  int n_modes = 0;
  std::vector<double> one_body;  // epsilon per mode
  std::vector<TwoBodyTerm> two_body;

  std::vector<FermionMonomial> monomials() const {
    std::vector<FermionMonomial> out;
    for (int p = 0; p < n_modes; ++p)
      if (one_body[static_cast<std::size_t>(p)] != 0.0)
        out.push_back({{create(p), annihilate(p)}, one_body[static_cast<std::size_t>(p)]});
    for (const auto& t : two_body)
      out.push_back({{create(t.p), create(t.q), annihilate(t.s), annihilate(t.r)}, t.coeff});
    return out;
  }
};

struct HamiltonianOptions {
  /// Interaction files carry matrix elements between normalized two-body
  /// states; set false to use the values with bare pair operators.
  bool normalized_tbme = true;
};

struct PairAmplitude {
  int p = 0, q = 0;  // modes
  double coeff = 0.0;
};

namespace detail {

class ModeLookup {
 public:
  explicit ModeLookup(const std::vector<SingleParticleState>& modes) {
    for (std::size_t k = 0; k < modes.size(); ++k)
      table_[{modes[k].orbital, modes[k].m2, modes[k].tz2}] = static_cast<int>(k);
  }
  int find(int orbital, int m2, int tz2) const {
    auto it = table_.find({orbital, m2, tz2});
    return it == table_.end() ? -1 : it->second;
  }

 private:
  std::map<std::tuple<int, int, int>, int> table_;
};

}  // namespace detail

/// Expansion of the coupled pair creator A+_{J M T MT}(ab) as
/// sum coeff * c+_p c+_q over modes present in the valence space.
inline std::vector<PairAmplitude> pair_creation_terms(const InteractionData& data,
                                                      const std::vector<SingleParticleState>& modes,
                                                      int a, int b, int J, int M2, int T, int MT2) {
  const detail::ModeLookup lookup(modes);
  const int ja = data.orbitals[static_cast<std::size_t>(a)].j2;
  const int jb = data.orbitals[static_cast<std::size_t>(b)].j2;
  std::vector<PairAmplitude> out;
  for (int ma = -ja; ma <= ja; ma += 2) {
    const int mb = M2 - ma;
    if (std::abs(mb) > jb) continue;
    const double cg_j = clebsch_gordan(ja, ma, jb, mb, 2 * J, M2);
    if (cg_j == 0.0) continue;
    for (int mua = -1; mua <= 1; mua += 2) {
      const int mub = MT2 - mua;
      if (std::abs(mub) != 1) continue;
      const double cg_t = clebsch_gordan(1, mua, 1, mub, 2 * T, MT2);
      if (cg_t == 0.0) continue;
      const int p = lookup.find(a, ma, mua), q = lookup.find(b, mb, mub);
      if (p < 0 || q < 0) continue;
      out.push_back({p, q, cg_j * cg_t});
    }
  }
  return out;
}

/// Expands SPE and TBME data into mode-level one- and two-body terms.
inline SecondQuantizedHamiltonian second_quantize(const InteractionData& data,
                                                  const std::vector<SingleParticleState>& modes,
                                                  HamiltonianOptions options = {}) {
  SecondQuantizedHamiltonian h;
  h.n_modes = static_cast<int>(modes.size());
  h.one_body.resize(modes.size());
  for (std::size_t k = 0; k < modes.size(); ++k) {
    const auto o = static_cast<std::size_t>(modes[k].orbital);
    if (o >= data.spe.size()) throw DimensionError("mode refers to an orbital outside the interaction");
    h.one_body[k] = data.spe[o];
  }

  std::map<std::tuple<int, int, int, int>, double> acc;
  auto add_pair_product = [&](const std::vector<PairAmplitude>& left,
                              const std::vector<PairAmplitude>& right, double v) {
    // v * (sum_L c+_p c+_q) (sum_R c+_r c+_s)^dagger = v * sum c+_p c+_q c_s c_r
    for (const auto& L : left) {
      if (L.p == L.q) continue;
      int p = L.p, q = L.q;
      double sign = 1.0;
      if (p > q) std::swap(p, q), sign = -sign;
      for (const auto& R : right) {
        if (R.p == R.q) continue;
        int r = R.p, s = R.q;
        double sgn = sign;
        if (r > s) std::swap(r, s), sgn = -sgn;
        acc[{p, q, r, s}] += sgn * v * L.coeff * R.coeff;
      }
    }
  };

  for (const auto& t : data.tbme) {
    double v = t.value;
    if (options.normalized_tbme) {
      if (t.a == t.b) v /= std::sqrt(2.0);
      if (t.c == t.d) v /= std::sqrt(2.0);
    }
    for (int M2 = -2 * t.J; M2 <= 2 * t.J; M2 += 2) {
      for (int MT2 = -2 * t.T; MT2 <= 2 * t.T; MT2 += 2) {
        const auto ab = pair_creation_terms(data, modes, t.a, t.b, t.J, M2, t.T, MT2);
        const auto cd = pair_creation_terms(data, modes, t.c, t.d, t.J, M2, t.T, MT2);
        add_pair_product(ab, cd, v);
        if (std::tie(t.a, t.b) != std::tie(t.c, t.d)) add_pair_product(cd, ab, v);
      }
    }
  }
  for (const auto& [key, coeff] : acc) {
    if (std::abs(coeff) < kPruneTolerance) continue;
    const auto [p, q, r, s] = key;
    h.two_body.push_back({p, q, r, s, coeff});
  }
  return h;
}

/// Matrix of the second-quantized Hamiltonian in a configuration basis.
inline SparseHamiltonian build_hamiltonian(const SecondQuantizedHamiltonian& h,
                                           const ConfigurationBasis& basis) {
  const int n = h.n_modes;
  if (basis.n_modes() != n)
    throw DimensionError("basis has " + std::to_string(basis.n_modes()) + " modes, Hamiltonian has " +
                         std::to_string(n));
  // Terms grouped by the annihilated pair (r, s).
  std::vector<std::vector<const TwoBodyTerm*>> by_pair(static_cast<std::size_t>(n * n));
  for (const auto& t : h.two_body) by_pair[static_cast<std::size_t>(t.r * n + t.s)].push_back(&t);

  std::vector<std::map<int, double>> acc(static_cast<std::size_t>(basis.size()));
  std::vector<int> occ;
  for (int col = 0; col < basis.size(); ++col) {
    const Bits x = basis.state(col);
    occ.clear();
    double diag = 0.0;
    for (int k = 0; k < n; ++k) {
      if (!test_qubit(x, n, k)) continue;
      occ.push_back(k);
      diag += h.one_body[static_cast<std::size_t>(k)];
    }
    if (diag != 0.0) acc[static_cast<std::size_t>(col)][col] += diag;
    for (std::size_t i = 0; i < occ.size(); ++i) {
      for (std::size_t j = i + 1; j < occ.size(); ++j) {
        for (const TwoBodyTerm* t : by_pair[static_cast<std::size_t>(occ[i] * n + occ[j])]) {
          Bits y = x;
          double sign = apply_ladder(y, n, annihilate(t->r));
          sign *= apply_ladder(y, n, annihilate(t->s));
          sign *= apply_ladder(y, n, create(t->q));
          if (sign == 0.0) continue;
          sign *= apply_ladder(y, n, create(t->p));
          if (sign == 0.0) continue;
          const int row = basis.index_of(y);
          if (row < 0) continue;  // leaves the constrained sector
          acc[static_cast<std::size_t>(row)][col] += sign * t->coeff;
        }
      }
    }
  }
  // Exact symmetry: average the two computed triangles.
  for (std::size_t r = 0; r < acc.size(); ++r) {
    for (auto& [c, v] : acc[r]) {
      if (static_cast<std::size_t>(c) <= r) continue;
      auto& other = acc[static_cast<std::size_t>(c)][static_cast<int>(r)];
      const double mean = 0.5 * (v + other);
      v = mean;
      other = mean;
    }
  }
  return SparseHamiltonian::from_maps(acc);
}

inline SparseHamiltonian build_hamiltonian(const InteractionData& data,
                                           const std::vector<SingleParticleState>& modes,
                                           const ConfigurationBasis& basis, HamiltonianOptions options = {}) {
  if (basis.n_modes() != static_cast<int>(modes.size()))
    throw DimensionError("basis was not built over these single-particle states");
  return build_hamiltonian(second_quantize(data, modes, options), basis);
}

/// Sum of mode energies of the occupied modes.
inline double one_body_energy(Bits config, const std::vector<double>& mode_energies) {
  const int n = static_cast<int>(mode_energies.size());
  double e = 0.0;
  for (int k = 0; k < n; ++k)
    if (test_qubit(config, n, k)) e += mode_energies[static_cast<std::size_t>(k)];
  return e;
}

}  // namespace qegfmc
