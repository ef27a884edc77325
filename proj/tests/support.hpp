#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "qegfmc/fermion_map.hpp"
#include "qegfmc/pauli.hpp"
#include "qegfmc/sparse_matrix.hpp"

namespace qegfmc::testing {

inline PauliOperator random_hamiltonian(int n, int terms, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  PauliOperator h(n);
  for (int k = 0; k < terms; ++k) {
    std::string s;
    for (int q = 0; q < n; ++q) s += "IXYZ"[rng() % 4];
    h.add(PauliString::from_letters(s), g(rng));
  }
  return h;
}

inline VectorXc random_state(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  VectorXc v(Eigen::Index{1} << n);
  for (auto& a : v) a = cplx(g(rng), g(rng));
  return v.normalized();
}

/// Real symmetric sparse matrix with a negative nearest-neighbour chain (so
/// the fixed-node graph stays connected) plus random extra couplings of
/// either sign, or nonpositive only when `sign_free`.
inline SparseHamiltonian random_sparse_symmetric(int dim, double density, std::mt19937_64& rng,
                                                 bool sign_free = false) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim, dim);
  for (int i = 0; i < dim; ++i) m(i, i) = 2.0 * g(rng);
  for (int i = 0; i + 1 < dim; ++i) m(i, i + 1) = m(i + 1, i) = -(0.2 + u(rng));
  for (int i = 0; i < dim; ++i)
    for (int j = i + 2; j < dim; ++j) {
      if (u(rng) >= density) continue;
      double v = g(rng);
      if (sign_free) v = -std::abs(v);
      m(i, j) = m(j, i) = v;
    }
  return SparseHamiltonian::from_dense(m);
}

/// Spinless fermions on n modes with random on-site energies, hoppings of
/// either sign and density-density couplings, mapped with Jordan-Wigner.
/// The hopping signs make the particle-number sectors frustrated.
inline PauliOperator random_fermion_hamiltonian(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  std::vector<FermionMonomial> ms;
  for (int j = 0; j < n; ++j) ms.push_back({{create(j), annihilate(j)}, cplx(1.2 * g(rng))});
  for (int j = 0; j < n; ++j)
    for (int k = j + 1; k < n; ++k) {
      const double t = 0.5 * g(rng);
      ms.push_back({{create(j), annihilate(k)}, cplx(t)});
      ms.push_back({{create(k), annihilate(j)}, cplx(t)});
      ms.push_back({{create(j), annihilate(j), create(k), annihilate(k)}, cplx(0.5 * g(rng))});
    }
  return map_fermion_operator(n, ms);
}

/// Least-squares slope of y against x.
inline double slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace qegfmc::testing
