#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "qegfmc/common.hpp"
#include "qegfmc/pauli.hpp"
#include "qegfmc/rng.hpp"
#include "qegfmc/sparse_matrix.hpp"

namespace qegfmc::oracle {

struct SpectrumResult {
  std::vector<double> eigenvalues;          // ascending
  std::optional<MatrixXc> eigenvectors;     // columns, when requested
};

/// Largest dimension diagonalized densely.
inline constexpr Eigen::Index kDenseCutoff = Eigen::Index{1} << 14;

namespace detail {

inline SpectrumResult dense_spectrum(const MatrixXc& m, int k, bool vectors) {
  if ((m - m.adjoint()).cwiseAbs().maxCoeff() > 1e-9 * std::max(1.0, m.cwiseAbs().maxCoeff()))
    throw NumericalError("spectrum requested for a non-Hermitian matrix");
  Eigen::SelfAdjointEigenSolver<MatrixXc> es(m, vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("dense eigensolver failed");
  const int count = std::min<int>(k, static_cast<int>(m.rows()));
  SpectrumResult r;
  r.eigenvalues.assign(es.eigenvalues().data(), es.eigenvalues().data() + count);
  if (vectors) r.eigenvectors = es.eigenvectors().leftCols(count);
  return r;
}

/// Lanczos with full reorthogonalization for the k lowest eigenpairs.
template <class MatVec>
SpectrumResult lanczos(MatVec&& apply, Eigen::Index dim, int k, bool vectors, std::uint64_t seed = 7) {
  const int max_iter = static_cast<int>(std::min<Eigen::Index>(dim, std::max(4 * k + 60, 200)));
  SplitMix64 rng(seed);
  VectorXc q(dim);
  for (Eigen::Index i = 0; i < dim; ++i) q(i) = rng.uniform() - 0.5;
  q.normalize();
  std::vector<VectorXc> basis{q};
  std::vector<double> alpha, beta;
  for (int it = 0; it < max_iter; ++it) {
    VectorXc w = apply(basis.back());
    const double a = basis.back().dot(w).real();
    alpha.push_back(a);
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& b : basis) w -= b * b.dot(w);
    const double bnorm = w.norm();
    if (bnorm < 1e-12 || it + 1 == max_iter) break;
    beta.push_back(bnorm);
    basis.push_back(w / bnorm);
  }
  const int m = static_cast<int>(alpha.size());
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    t(i, i) = alpha[static_cast<std::size_t>(i)];
    if (i + 1 < m) t(i, i + 1) = t(i + 1, i) = beta[static_cast<std::size_t>(i)];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
  const int count = std::min(k, m);
  SpectrumResult r;
  r.eigenvalues.assign(es.eigenvalues().data(), es.eigenvalues().data() + count);
  if (vectors) {
    MatrixXc v = MatrixXc::Zero(dim, count);
    for (int c = 0; c < count; ++c) {
      for (int i = 0; i < m; ++i) v.col(c) += es.eigenvectors()(i, c) * basis[static_cast<std::size_t>(i)];
      v.col(c).normalize();
    }
    r.eigenvectors = v;
  }
  return r;
}

}  // namespace detail

/// k lowest eigenpairs; dense up to 2^14 basis states, Lanczos above.
inline SpectrumResult exact_spectrum(const SparseHamiltonian& h, int k, bool vectors = false) {
  if (h.dim() <= kDenseCutoff) {
    if (h.asymmetry() > 1e-10) throw NumericalError("spectrum requested for a non-Hermitian matrix");
    return detail::dense_spectrum(h.to_dense().cast<cplx>(), k, vectors);
  }
  if (h.asymmetry() > 1e-10) throw NumericalError("spectrum requested for a non-Hermitian matrix");
  return detail::lanczos([&](const VectorXc& x) { return h.multiply(x); }, h.dim(), k, vectors);
}

inline SpectrumResult exact_spectrum(const PauliOperator& h, int k, bool vectors = false) {
  if (!h.is_hermitian(1e-10)) throw NumericalError("spectrum requested for a non-Hermitian operator");
  const Eigen::Index dim = Eigen::Index{1} << h.n_qubits();
  if (dim <= kDenseCutoff) return detail::dense_spectrum(h.to_dense(), k, vectors);
  return detail::lanczos([&](const VectorXc& x) { return pauli_apply(h, x); }, dim, k, vectors);
}

inline SpectrumResult exact_spectrum(const MatrixXc& h, int k, bool vectors = false) {
  return detail::dense_spectrum(h, k, vectors);
}

/// exp(-i H t) v by Pade scaling and squaring.
inline VectorXc exact_evolution(const MatrixXc& h, const VectorXc& v, double t) {
  if (h.rows() != v.size()) throw DimensionError("state does not match Hamiltonian");
  if (t == 0.0) return v;
  const MatrixXc generator = cplx(0.0, -t) * h;
  const MatrixXc u = generator.exp();
  return u * v;
}

inline VectorXc exact_evolution(const PauliOperator& h, const VectorXc& v, double t) {
  return exact_evolution(h.to_dense(), v, t);
}

/// Effective fixed-node Hamiltonian built entry by entry: off-diagonal
/// H_xy kept where H_xy <= 0, replaced by -gamma H_xy where H_xy > 0, and
/// the diagonal raised by (1 + gamma) times the sum of positive entries in
/// the column.
inline Eigen::MatrixXd fixed_node_hamiltonian(const Eigen::MatrixXd& h, double gamma) {
  const Eigen::Index d = h.rows();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index c = 0; c < d; ++c) {
    double positive = 0.0;
    for (Eigen::Index r = 0; r < d; ++r) {
      if (r == c) continue;
      if (h(r, c) > 0.0) {
        positive += h(r, c);
        out(r, c) = -gamma * h(r, c);
      } else {
        out(r, c) = h(r, c);
      }
    }
    out(c, c) = h(c, c) + (1.0 + gamma) * positive;
  }
  return out;
}

inline SpectrumResult fixed_node_spectrum(const SparseHamiltonian& h, double gamma, int k = 1,
                                          bool vectors = false) {
  return detail::dense_spectrum(fixed_node_hamiltonian(h.to_dense(), gamma).cast<cplx>(), k, vectors);
}

/// Lowest eigenvalue of the generalized problem H c = E S c with S positive
/// definite, from Eigen's Cholesky-based solver.
inline std::vector<double> generalized_eigenvalues(const MatrixXc& h, const MatrixXc& s) {
  Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXc> es(h, s, Eigen::EigenvaluesOnly | Eigen::Ax_lBx);
  if (es.info() != Eigen::Success) throw NumericalError("generalized eigensolver failed");
  return {es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size()};
}

}  // namespace qegfmc::oracle
