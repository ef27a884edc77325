#pragma once

#include <vector>

#include "qegfmc/common.hpp"

namespace qegfmc {

struct LadderOp {
  int mode = 0;
  bool creation = false;
};

/// coeff * ops[0] ops[1] ... ops[k-1]; the rightmost operator acts first.
struct FermionMonomial {
  std::vector<LadderOp> ops;
  cplx coeff{1.0, 0.0};
};

inline LadderOp create(int mode) { return {mode, true}; }
inline LadderOp annihilate(int mode) { return {mode, false}; }

/// Occupation of mode k is stored in qubit k of a configuration bitstring.
/// Jordan-Wigner sign convention: the sign of a_k on |x> is (-1)^(number of
/// occupied modes j < k).
inline double apply_ladder(Bits& config, int n_modes, LadderOp op) {
  const Bits bit = qubit_bit(n_modes, op.mode);
  const bool occupied = (config & bit) != 0;
  if (occupied == op.creation) return 0.0;
  // Modes j < k sit at more significant bits than mode k.
  const Bits higher = ~((bit << 1) - 1);
  const double sign = parity_sign(config & higher);
  config ^= bit;
  return sign;
}

/// Applies a monomial to a configuration; returns the amplitude (0 if
/// annihilated) and updates `config` in place.
inline cplx apply_monomial(Bits& config, int n_modes, const FermionMonomial& m) {
  double sign = 1.0;
  for (auto it = m.ops.rbegin(); it != m.ops.rend(); ++it) {
    sign *= apply_ladder(config, n_modes, *it);
    if (sign == 0.0) return 0.0;
  }
  return sign * m.coeff;
}

}  // namespace qegfmc
