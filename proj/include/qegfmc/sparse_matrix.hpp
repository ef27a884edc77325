#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <utility>
#include <vector>

#include "qegfmc/common.hpp"

namespace qegfmc {

struct SparseEntry {
  int col = 0;
  double value = 0.0;
};

/// Real symmetric matrix over a configuration basis, stored row by row with
/// columns ascending. Used both for the shell-model Hamiltonian and for the
/// fixed-node Green's function.
class SparseHamiltonian {
 public:
  SparseHamiltonian() = default;
  explicit SparseHamiltonian(int dim) : rows_(static_cast<std::size_t>(dim)) {}

  int dim() const { return static_cast<int>(rows_.size()); }
  const std::vector<SparseEntry>& row(int r) const { return rows_[static_cast<std::size_t>(r)]; }
  const std::vector<std::vector<SparseEntry>>& rows() const { return rows_; }

  double at(int r, int c) const {
    const auto& rw = row(r);
    auto it = std::lower_bound(rw.begin(), rw.end(), c,
                               [](const SparseEntry& e, int col) { return e.col < col; });
    return (it != rw.end() && it->col == c) ? it->value : 0.0;
  }

  double diagonal(int r) const { return at(r, r); }

  std::size_t nonzeros() const {
    std::size_t n = 0;
    for (const auto& r : rows_) n += r.size();
    return n;
  }

  Eigen::MatrixXd to_dense() const {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim(), dim());
    for (int r = 0; r < dim(); ++r)
      for (const auto& e : row(r)) m(r, e.col) = e.value;
    return m;
  }

  /// y = A x
  template <class Vec>
  Vec multiply(const Vec& x) const {
    Vec y = Vec::Zero(dim());
    for (int r = 0; r < dim(); ++r)
      for (const auto& e : row(r)) y(r) += e.value * x(e.col);
    return y;
  }

  /// Largest |A(r,c) - A(c,r)|.
  double asymmetry() const {
    double worst = 0.0;
    for (int r = 0; r < dim(); ++r)
      for (const auto& e : row(r)) worst = std::max(worst, std::abs(e.value - at(e.col, r)));
    return worst;
  }

  /// Upper bound on the spectral width from Gershgorin discs.
  double gershgorin_width() const {
    if (dim() == 0) return 0.0;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (int r = 0; r < dim(); ++r) {
      double radius = 0.0, d = 0.0;
      for (const auto& e : row(r)) {
        if (e.col == r)
          d = e.value;
        else
          radius += std::abs(e.value);
      }
      lo = std::min(lo, d - radius);
      hi = std::max(hi, d + radius);
    }
    return hi - lo;
  }

  static SparseHamiltonian from_dense(const Eigen::MatrixXd& m, double tol = kPruneTolerance) {
    if (m.rows() != m.cols()) throw DimensionError("sparse matrix must be square");
    SparseHamiltonian h(static_cast<int>(m.rows()));
    for (int r = 0; r < h.dim(); ++r)
      for (int c = 0; c < h.dim(); ++c)
        if (std::abs(m(r, c)) >= tol) h.rows_[static_cast<std::size_t>(r)].push_back({c, m(r, c)});
    return h;
  }

  /// Builds from accumulated (row -> col -> value) maps, dropping |v| < tol.
  static SparseHamiltonian from_maps(const std::vector<std::map<int, double>>& acc,
                                     double tol = kPruneTolerance) {
    SparseHamiltonian h(static_cast<int>(acc.size()));
    for (std::size_t r = 0; r < acc.size(); ++r)
      for (const auto& [c, v] : acc[r])
        if (std::abs(v) >= tol) h.rows_[r].push_back({c, v});
    return h;
  }

 private:
  std::vector<std::vector<SparseEntry>> rows_;
};

}  // namespace qegfmc
