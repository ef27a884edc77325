#pragma once

#include <string>
#include <vector>

#include "qegfmc/common.hpp"
#include "qegfmc/fermion_map.hpp"
#include "qegfmc/pauli.hpp"
#include "qegfmc/qsd.hpp"
#include "qegfmc/shell_model.hpp"
#include "qegfmc/sparse_matrix.hpp"

namespace qegfmc {

/// A shell-model sector together with its qubit Hamiltonian.
struct ShellProblem {
  InteractionData data;
  std::vector<SingleParticleState> modes;
  ConfigurationBasis basis;
  SecondQuantizedHamiltonian second_quantized;
  SparseHamiltonian sector_hamiltonian;
  PauliOperator qubit_hamiltonian;
  FermionRegister reg;

  int n_qubits() const { return static_cast<int>(modes.size()); }

  /// Sector components of a qubit-register vector.
  VectorXc to_sector(const VectorXc& qubits) const {
    const FermionEncoding enc(n_qubits(), reg.scheme);
    VectorXc out(basis.size());
    for (int k = 0; k < basis.size(); ++k) out(k) = qubits(static_cast<Eigen::Index>(enc.encode(basis.state(k))));
    return out;
  }

  /// Qubit-register vector of sector amplitudes.
  VectorXc from_sector(const VectorXc& sector) const {
    const FermionEncoding enc(n_qubits(), reg.scheme);
    VectorXc out = VectorXc::Zero(Eigen::Index{1} << n_qubits());
    for (int k = 0; k < basis.size(); ++k) out(static_cast<Eigen::Index>(enc.encode(basis.state(k)))) = sector(k);
    return out;
  }
};

inline ShellProblem make_shell_problem(InteractionData data, Species species, BasisConstraints constraints,
                                       MappingScheme scheme = MappingScheme::JordanWigner,
                                       HamiltonianOptions options = {}, IsospinConvention iso = {}) {
  auto modes = single_particle_states(data, species, iso);
  if (modes.size() > 20) throw DimensionError("qubit register limited to 20 modes");
  ConfigurationBasis basis = enumerate_basis(modes, constraints);
  SecondQuantizedHamiltonian sq = second_quantize(data, modes, options);
  SparseHamiltonian sector = build_hamiltonian(sq, basis);
  PauliOperator hq = map_fermion_operator(sq.n_modes, sq.monomials(), scheme);
  FermionRegister reg;
  reg.n_modes = sq.n_modes;
  reg.particles = constraints.particles ? *constraints.particles : popcount(basis.state(0));
  reg.mode_energies = sq.one_body;
  reg.scheme = scheme;
  reg.sector = basis.states();
  return {std::move(data), std::move(modes), std::move(basis), std::move(sq),
          std::move(sector), std::move(hq), std::move(reg)};
}

}  // namespace qegfmc
