#pragma once

#include <string>
#include <vector>

#include "qegfmc/common.hpp"
#include "qegfmc/fermion.hpp"
#include "qegfmc/pauli.hpp"

namespace qegfmc {

enum class MappingScheme { JordanWigner, BravyiKitaev };

inline MappingScheme parse_mapping_scheme(const std::string& s) {
  if (s == "jordan-wigner" || s == "jw") return MappingScheme::JordanWigner;
  if (s == "bravyi-kitaev" || s == "bk") return MappingScheme::BravyiKitaev;
  throw ConfigError("unknown mapping scheme '" + s + "'");
}

inline std::string to_string(MappingScheme s) {
  return s == MappingScheme::JordanWigner ? "jordan-wigner" : "bravyi-kitaev";
}

/// Linear (mod 2) encoding of occupation vectors into qubit values,
/// b = beta * n. Rows and columns are mode indices; row j is stored as a
/// bitmask whose bit k is beta_jk.
class FermionEncoding {
 public:
  FermionEncoding(int n_modes, MappingScheme scheme) : n_(n_modes), scheme_(scheme) {
    if (n_modes < 1 || n_modes > 62) throw DimensionError("unsupported number of modes");
    beta_.assign(static_cast<std::size_t>(n_), 0);
    for (int j = 0; j < n_; ++j) {
      if (scheme == MappingScheme::JordanWigner) {
        beta_[static_cast<std::size_t>(j)] = Bits{1} << j;
      } else {
        // Fenwick tree: qubit j holds the parity of modes (j & (j+1)) .. j.
        for (int k = (j & (j + 1)); k <= j; ++k) beta_[static_cast<std::size_t>(j)] |= Bits{1} << k;
      }
    }
    beta_inv_ = invert(beta_);
  }

  int n_modes() const { return n_; }
  MappingScheme scheme() const { return scheme_; }

  /// Qubit basis index holding the occupation configuration `config`.
  Bits encode(Bits config) const { return apply(beta_, config); }
  Bits decode(Bits qubits) const { return apply(beta_inv_, qubits); }

  /// Qubits flipped when mode j changes occupation (column j of beta).
  Bits update_set(int j) const {
    Bits mask = 0;
    for (int r = 0; r < n_; ++r)
      if ((beta_[static_cast<std::size_t>(r)] >> j) & 1) mask |= qubit_bit(n_, r);
    return mask;
  }
  /// Qubits whose parity is the occupation of mode j (row j of beta^-1).
  Bits occupation_set(int j) const { return to_qubit_mask(beta_inv_[static_cast<std::size_t>(j)]); }
  /// Qubits whose parity is the occupation parity of modes 0 .. j-1.
  Bits parity_set(int j) const {
    Bits row = 0;
    for (int k = 0; k < j; ++k) row ^= beta_inv_[static_cast<std::size_t>(k)];
    return to_qubit_mask(row);
  }

  /// Qubit image of a single ladder operator:
  /// X_U (I -+ Z_O)/2 Z_P with '+' for creation.
  PauliOperator ladder(LadderOp op) const {
    if (op.mode < 0 || op.mode >= n_)
      throw DimensionError("mode " + std::to_string(op.mode) + " outside a " + std::to_string(n_) + "-mode register");
    const PauliOperator flip(PauliString::x_mask(n_, update_set(op.mode)), 1.0);
    PauliOperator projector = PauliOperator::identity(n_, 0.5);
    projector += PauliOperator(PauliString::z_mask(n_, occupation_set(op.mode)), op.creation ? 0.5 : -0.5);
    const PauliOperator sign(PauliString::z_mask(n_, parity_set(op.mode)), 1.0);
    return flip * projector * sign;
  }

 private:
  Bits to_qubit_mask(Bits row) const {
    Bits mask = 0;
    for (int k = 0; k < n_; ++k)
      if ((row >> k) & 1) mask |= qubit_bit(n_, k);
    return mask;
  }

  // Matrix-vector product over GF(2); `v` uses the register bit convention.
  Bits apply(const std::vector<Bits>& m, Bits v) const {
    Bits plain = 0;
    for (int k = 0; k < n_; ++k)
      if (test_qubit(v, n_, k)) plain |= Bits{1} << k;
    Bits out = 0;
    for (int r = 0; r < n_; ++r)
      if (popcount(m[static_cast<std::size_t>(r)] & plain) & 1) out |= qubit_bit(n_, r);
    return out;
  }

  std::vector<Bits> invert(std::vector<Bits> m) const {
    std::vector<Bits> inv(static_cast<std::size_t>(n_));
    for (int r = 0; r < n_; ++r) inv[static_cast<std::size_t>(r)] = Bits{1} << r;
    for (int c = 0; c < n_; ++c) {
      int pivot = c;
      while (pivot < n_ && !((m[static_cast<std::size_t>(pivot)] >> c) & 1)) ++pivot;
      if (pivot == n_) throw NumericalError("encoding matrix is singular");
      std::swap(m[static_cast<std::size_t>(c)], m[static_cast<std::size_t>(pivot)]);
      std::swap(inv[static_cast<std::size_t>(c)], inv[static_cast<std::size_t>(pivot)]);
      for (int r = 0; r < n_; ++r) {
        if (r != c && ((m[static_cast<std::size_t>(r)] >> c) & 1)) {
          m[static_cast<std::size_t>(r)] ^= m[static_cast<std::size_t>(c)];
          inv[static_cast<std::size_t>(r)] ^= inv[static_cast<std::size_t>(c)];
        }
      }
    }
    return inv;
  }

  int n_;
  MappingScheme scheme_;
  std::vector<Bits> beta_;
  std::vector<Bits> beta_inv_;
};

/// Qubit image of sum_k coeff_k * ops_k.
inline PauliOperator map_fermion_operator(int n_modes, const std::vector<FermionMonomial>& monomials,
                                          MappingScheme scheme = MappingScheme::JordanWigner) {
  const FermionEncoding enc(n_modes, scheme);
  std::vector<PauliOperator> cache_create(static_cast<std::size_t>(n_modes)), cache_annihilate(cache_create);
  for (int j = 0; j < n_modes; ++j) {
    cache_create[static_cast<std::size_t>(j)] = enc.ladder(create(j));
    cache_annihilate[static_cast<std::size_t>(j)] = enc.ladder(annihilate(j));
  }
  PauliOperator out(n_modes);
  for (const auto& m : monomials) {
    PauliOperator term = PauliOperator::identity(n_modes, m.coeff);
    for (const auto& op : m.ops) {
      if (op.mode < 0 || op.mode >= n_modes)
        throw DimensionError("mode " + std::to_string(op.mode) + " outside a " + std::to_string(n_modes) +
                             "-mode register");
      term = term * (op.creation ? cache_create : cache_annihilate)[static_cast<std::size_t>(op.mode)];
    }
    out += term;
  }
  return out;
}

}  // namespace qegfmc
