#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>
#include <unsupported/Eigen/MatrixFunctions>

#include "qegfmc/common.hpp"
#include "qegfmc/evolution.hpp"
#include "qegfmc/fermion_map.hpp"
#include "qegfmc/parallel.hpp"
#include "qegfmc/pauli.hpp"
#include "qegfmc/shadows.hpp"

namespace qegfmc {

// ---------------------------------------------------------------------------
// Initial states
// ---------------------------------------------------------------------------

struct InitialStatePrep {
  enum class Kind { HartreeFock, ExcitationOnHF, Explicit };
  Kind kind = Kind::HartreeFock;
  int i = 0, j = 0;     // excitation a_i a_j^dagger - a_j a_i^dagger
  double theta = 1.0;   // generator scale
  VectorXc amplitudes;  // Explicit

  static InitialStatePrep hartree_fock() { return {}; }
  static InitialStatePrep excitation(int i, int j, double theta = 1.0) { return {Kind::ExcitationOnHF, i, j, theta, {}}; }
  static InitialStatePrep explicit_state(VectorXc amps) { return {Kind::Explicit, 0, 0, 1.0, std::move(amps)}; }
};

/// What is needed to turn a preparation into qubit amplitudes.
struct FermionRegister {
  int n_modes = 0;
  int particles = 0;
  std::vector<double> mode_energies;
  MappingScheme scheme = MappingScheme::JordanWigner;
  /// Allowed occupation configurations; empty means any with `particles`.
  std::vector<Bits> sector;
};

/// Lowest one-body-energy configuration. Inside a sector the minimum is taken
/// over its configurations; otherwise the lowest modes are filled, ties by
/// mode index.
inline Bits hartree_fock_configuration(const FermionRegister& reg) {
  if (reg.particles < 0 || reg.particles > reg.n_modes) throw ConfigError("particle count exceeds mode count");
  if (static_cast<int>(reg.mode_energies.size()) != reg.n_modes) throw DimensionError("mode energies do not match modes");
  auto energy = [&](Bits x) {
    double e = 0.0;
    for (int k = 0; k < reg.n_modes; ++k)
      if (test_qubit(x, reg.n_modes, k)) e += reg.mode_energies[static_cast<std::size_t>(k)];
    return e;
  };
  if (!reg.sector.empty()) {
    Bits best = reg.sector.front();
    for (Bits x : reg.sector)
      if (energy(x) < energy(best) - 1e-12) best = x;
    return best;
  }
  std::vector<int> order(static_cast<std::size_t>(reg.n_modes));
  for (int k = 0; k < reg.n_modes; ++k) order[static_cast<std::size_t>(k)] = k;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return reg.mode_energies[static_cast<std::size_t>(a)] < reg.mode_energies[static_cast<std::size_t>(b)];
  });
  Bits x = 0;
  for (int k = 0; k < reg.particles; ++k) x |= qubit_bit(reg.n_modes, order[static_cast<std::size_t>(k)]);
  return x;
}

/// Qubit image of a_i a_j^dagger - a_j a_i^dagger.
inline PauliOperator excitation_generator(const FermionRegister& reg, int i, int j) {
  const std::vector<FermionMonomial> terms{{{annihilate(i), create(j)}, 1.0}, {{annihilate(j), create(i)}, -1.0}};
  return map_fermion_operator(reg.n_modes, terms, reg.scheme);
}

inline StateVector prepare_initial_state(const InitialStatePrep& prep, const FermionRegister& reg) {
  const int n = reg.n_modes;
  if (prep.kind == InitialStatePrep::Kind::Explicit) {
    if (prep.amplitudes.size() != (Eigen::Index{1} << n)) throw DimensionError("explicit state has the wrong size");
    return StateVector::normalized(n, prep.amplitudes);
  }
  const FermionEncoding enc(n, reg.scheme);
  StateVector hf = StateVector::basis(n, enc.encode(hartree_fock_configuration(reg)));
  if (prep.kind == InitialStatePrep::Kind::HartreeFock || prep.i == prep.j) return hf;
  if (prep.i < 0 || prep.j < 0 || prep.i >= n || prep.j >= n) throw ConfigError("excitation mode out of range");
  if (n > 12) throw DimensionError("excitation is exponentiated densely; at most 12 modes");
  const MatrixXc a = prep.theta * excitation_generator(reg, prep.i, prep.j).to_dense();
  const MatrixXc u = a.exp();
  return StateVector::normalized(n, u * hf.amplitudes());
}

// ---------------------------------------------------------------------------
// Subspace matrices and the generalized eigenproblem
// ---------------------------------------------------------------------------

struct SubspaceSpec {
  int dim = 4;
  double dt = 0.1;
  InitialStatePrep prep;
};

/// Time step that spreads the phases exp(-i E dt) of a spectrum of the given
/// width over the unit circle, leaving a gap of 2 pi / dim between the ends.
/// Keeps S well conditioned when dim approaches the Krylov rank.
inline double full_circle_time_step(double spectral_width, int dim) {
  if (!(spectral_width > 0.0) || dim < 1) throw ConfigError("spectral width and dimension must be positive");
  return 2.0 * M_PI * (dim - 1 > 0 ? dim - 1 : 1) / (dim * spectral_width);
}

inline void validate(const SubspaceSpec& s) {
  if (s.dim < 1) throw ConfigError("subspace dimension must be at least 1");
  if (!(s.dt > 0.0)) throw ConfigError("Krylov time step must be positive");
}

enum class QsdModeKind { Exact, Shadow };

struct QsdMode {
  QsdModeKind kind = QsdModeKind::Exact;
  ShadowSettings shadow;
  /// Also sample i == j pairs; needed when the trial density is rebuilt
  /// from shadows.
  bool diagonal_shadows = false;
  /// Relative cutoff on S eigenvalues; negative selects the default.
  double threshold = -1.0;
  int workers = 1;

  static QsdMode exact() { return {}; }
  static QsdMode shadow_mode(long shots, std::uint64_t seed, CliffordKind ensemble = CliffordKind::LocalProduct) {
    QsdMode m;
    m.kind = QsdModeKind::Shadow;
    m.shadow.shots = shots;
    m.shadow.seed = seed;
    m.shadow.ensemble = ensemble;
    return m;
  }
};

struct SubspaceMatrices {
  MatrixXc hs;
  MatrixXc s;
  Eigen::MatrixXd hs_stderr;  // zero in exact mode
  Eigen::MatrixXd s_stderr;
  QsdModeKind provenance = QsdModeKind::Exact;
  long shots = 0;
};

struct EigenSolution {
  std::vector<double> energies;  // ascending
  MatrixXc coefficients;         // columns, c^dagger S c = 1
  Eigen::VectorXd s_eigenvalues; // ascending, of the Hermitized S
  int retained = 0;
  double threshold = 0.0;
};

/// Solves H c = E S c on the span of S eigenvectors with eigenvalue at least
/// threshold * lambda_max(S).
inline EigenSolution solve_generalized_eig(const SubspaceMatrices& mats, double threshold) {
  const Eigen::Index n = mats.s.rows();
  if (n == 0 || mats.s.cols() != n || mats.hs.rows() != n || mats.hs.cols() != n)
    throw DimensionError("subspace matrices must be square and of equal size");
  auto check = [](const MatrixXc& m, const char* what) {
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m - m.adjoint()).cwiseAbs().maxCoeff() > 1e-6 * scale)
      throw NumericalError(std::string(what) + " is not Hermitian within tolerance");
  };
  check(mats.s, "S");
  check(mats.hs, "H^s");
  const MatrixXc s = 0.5 * (mats.s + mats.s.adjoint());
  const MatrixXc h = 0.5 * (mats.hs + mats.hs.adjoint());
  Eigen::SelfAdjointEigenSolver<MatrixXc> es(s);
  if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition of S failed");
  EigenSolution out;
  out.s_eigenvalues = es.eigenvalues();
  out.threshold = threshold;
  const double lmax = es.eigenvalues().maxCoeff();
  if (!(lmax > 0.0)) throw NumericalError("S has no positive eigenvalue");
  std::vector<Eigen::Index> keep;
  for (Eigen::Index k = 0; k < n; ++k)
    if (es.eigenvalues()(k) > 0.0 && es.eigenvalues()(k) >= threshold * lmax) keep.push_back(k);
  if (keep.empty()) throw NumericalError("threshold discards every direction of S");
  out.retained = static_cast<int>(keep.size());
  MatrixXc x(n, out.retained);
  for (int c = 0; c < out.retained; ++c) {
    const Eigen::Index k = keep[static_cast<std::size_t>(c)];
    x.col(c) = es.eigenvectors().col(k) / std::sqrt(es.eigenvalues()(k));
  }
  MatrixXc hp = x.adjoint() * h * x;
  hp = 0.5 * (hp + hp.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<MatrixXc> ep(hp);
  if (ep.info() != Eigen::Success) throw NumericalError("projected eigenproblem failed");
  out.energies.assign(ep.eigenvalues().data(), ep.eigenvalues().data() + out.retained);
  out.coefficients = x * ep.eigenvectors();
  for (int c = 0; c < out.retained; ++c) {
    // Fix the global phase: largest component real and positive.
    Eigen::Index arg = 0;
    out.coefficients.col(c).cwiseAbs().maxCoeff(&arg);
    const cplx z = out.coefficients(arg, c);
    out.coefficients.col(c) *= std::conj(z) / std::abs(z);
  }
  return out;
}

/// dE = c^dagger (dH - E dS) c with independent entry errors; (i, j) and
/// (j, i) are conjugates, so each unordered pair counts twice.
inline double first_order_stderr(const VectorXc& c, double energy, const SubspaceMatrices& m) {
  if (m.s_stderr.size() == 0) return 0.0;
  double var = 0.0;
  for (Eigen::Index i = 0; i < c.size(); ++i)
    for (Eigen::Index j = i + 1; j < c.size(); ++j) {
      const double w = std::norm(c(i)) * std::norm(c(j));
      var += 4.0 * w * (std::pow(m.hs_stderr(i, j), 2) + energy * energy * std::pow(m.s_stderr(i, j), 2));
    }
  return std::sqrt(var);
}

// ---------------------------------------------------------------------------
// Krylov runs sharing one primitive set
// ---------------------------------------------------------------------------

/// One Krylov basis state exp(-i H t) phi of some run.
struct Primitive {
  int run = 0;
  int k = 0;
  double t = 0.0;
  VectorXc state;
};

struct TrialState {
  int level = 0;
  double energy = 0.0;              // exact mode: Rayleigh quotient of the trial vector
  double energy_stderr = 0.0;       // first order in the entry errors
  VectorXc coefficients;            // over this run's filtered Krylov basis
  VectorXc primitive_coefficients;  // over every primitive of runs 0..level
  SubspaceMatrices matrices;        // this run's filtered H^s and S
  EigenSolution solution;
  SubspaceSpec spec;
};

/// Ground and excited Krylov runs. Each new level adds n primitives,
/// measures their overlaps and Hamiltonian elements against every primitive
/// so far, and projects out all earlier levels with the Gram matrix:
/// x <- x - v (v^dagger G x) / (v^dagger G v).
class KrylovChain {
 public:
  KrylovChain(PauliOperator h, EvolutionBackend backend, double trotter_dt, QsdMode mode)
      : h_(std::move(h)), prop_(h_, backend, trotter_dt), mode_(std::move(mode)) {}

  int n_qubits() const { return h_.n_qubits(); }
  const PauliOperator& hamiltonian() const { return h_; }
  const QsdMode& mode() const { return mode_; }
  const std::vector<Primitive>& primitives() const { return prims_; }
  const std::vector<TrialState>& levels() const { return levels_; }
  const MatrixXc& gram() const { return gram_; }
  const MatrixXc& h_elements() const { return hmat_; }
  const std::map<std::pair<int, int>, ShadowEstimate>& shadows() const { return shadows_; }

  double default_threshold(const SubspaceMatrices& m) const {
    if (mode_.threshold >= 0.0) return mode_.threshold;
    if (mode_.kind == QsdModeKind::Exact) return 1e-10;
    return std::max(1e-6, 3.0 * m.s_stderr.maxCoeff());
  }

  /// Adds a run from an explicit initial state and solves the filtered problem.
  const TrialState& add_level(const SubspaceSpec& spec, const VectorXc& phi) {
    auto [mats, x] = extend(spec, phi);
    const int level = static_cast<int>(levels_.size());
    if (level > 0 && mats.s.cwiseAbs().maxCoeff() < 1e-12) throw NumericalError("filter annihilates the excited subspace");
    TrialState ts;
    ts.level = level;
    ts.spec = spec;
    ts.matrices = std::move(mats);
    ts.solution = solve_generalized_eig(ts.matrices, default_threshold(ts.matrices));
    ts.energy = ts.solution.energies.front();
    ts.coefficients = ts.solution.coefficients.col(0);
    ts.primitive_coefficients = x * ts.coefficients;
    ts.energy_stderr = first_order_stderr(ts.coefficients, ts.energy, ts.matrices);
    levels_.push_back(std::move(ts));
    if (mode_.kind == QsdModeKind::Exact) {
      // The projected eigenvalue loses digits as 1/cond(S); the Rayleigh
      // quotient of the rebuilt vector has second-order error instead.
      const VectorXc v = trial_vector(level);
      levels_.back().energy = (expectation(h_, v, v) / v.squaredNorm()).real();
    }
    return levels_.back();
  }

  /// Measures the matrices of a first run without solving. Only valid on an
  /// empty chain, which then cannot take further levels.
  SubspaceMatrices unsolved_run(const SubspaceSpec& spec, const VectorXc& phi) {
    if (!prims_.empty()) throw ConfigError("unsolved runs need an empty chain");
    auto mats = extend(spec, phi).first;
    sealed_ = true;
    return mats;
  }

  const TrialState& add_level(const SubspaceSpec& spec, const FermionRegister& reg) {
    return add_level(spec, prepare_initial_state(spec.prep, reg).amplitudes());
  }

  /// Sum_p v_p |primitive_p> for a level, from the simulator's states.
  VectorXc trial_vector(int level) const {
    const auto& v = levels_.at(static_cast<std::size_t>(level)).primitive_coefficients;
    VectorXc out = VectorXc::Zero(Eigen::Index{1} << n_qubits());
    for (Eigen::Index p = 0; p < v.size(); ++p) out += v(p) * prims_[static_cast<std::size_t>(p)].state;
    return out;
  }

  /// rho_T = |phi_T><phi_T| of a level rebuilt from pair shadows:
  /// sum_p |v_p|^2 rho_pp + sum_{p<q} [2 Re(w) rho^R_pq - 2 Im(w) rho^I_pq],
  /// w = v_q v_p^*, where the (p, q) shadow estimates |psi_q><psi_p|.
  ShadowOperator trial_density(int level) const {
    if (mode_.kind != QsdModeKind::Shadow || !mode_.diagonal_shadows)
      throw ConfigError("trial density needs shadow mode with diagonal shadows");
    const auto& v = levels_.at(static_cast<std::size_t>(level)).primitive_coefficients;
    ShadowOperator op(n_qubits());
    for (Eigen::Index p = 0; p < v.size(); ++p)
      for (Eigen::Index q = p; q < v.size(); ++q) {
        const auto& est = shadows_.at({static_cast<int>(p), static_cast<int>(q)});
        if (p == q) {
          op.add(est, ShadowPart::Real, std::norm(v(p)));
          continue;
        }
        const cplx w = v(q) * std::conj(v(p));
        op.add(est, ShadowPart::Real, 2.0 * w.real());
        op.add(est, ShadowPart::Imag, -2.0 * w.imag());
      }
    return op;
  }

 private:
  /// Adds a run's primitives and returns its filtered matrices together with
  /// the filtered basis in primitive coordinates.
  std::pair<SubspaceMatrices, MatrixXc> extend(const SubspaceSpec& spec, const VectorXc& phi) {
    validate(spec);
    if (sealed_) throw ConfigError("chain was used for an unsolved run");
    if (phi.size() != (Eigen::Index{1} << n_qubits())) throw DimensionError("initial state does not match register");
    const int run = static_cast<int>(diag_energy_.size());
    const int first = static_cast<int>(prims_.size());
    const VectorXc phi_n = phi.normalized();
    for (int k = 0; k < spec.dim; ++k) {
      Primitive p{run, k, k * spec.dt, phi_n};
      prop_.apply(p.state, p.t);
      prims_.push_back(std::move(p));
    }
    diag_energy_.push_back(expectation(h_, phi_n, phi_n).real());
    extend_matrices(first);

    const Eigen::Index np = static_cast<Eigen::Index>(prims_.size());
    MatrixXc x = MatrixXc::Zero(np, spec.dim);
    for (int k = 0; k < spec.dim; ++k) x(first + k, k) = 1.0;
    for (const auto& prev : levels_) {
      VectorXc v = VectorXc::Zero(np);
      v.head(prev.primitive_coefficients.size()) = prev.primitive_coefficients;
      const cplx norm = v.dot(gram_ * v);
      if (std::abs(norm) < 1e-14) continue;
      x -= v * ((v.adjoint() * gram_ * x) / norm);
    }

    SubspaceMatrices m;
    m.provenance = mode_.kind;
    m.shots = mode_.kind == QsdModeKind::Shadow ? mode_.shadow.shots : 0;
    m.s = x.adjoint() * gram_ * x;
    m.hs = x.adjoint() * hmat_ * x;
    m.s = 0.5 * (m.s + m.s.adjoint()).eval();
    m.hs = 0.5 * (m.hs + m.hs.adjoint()).eval();
    // Error bars of the unfiltered block; the filter mixes in entries with
    // errors of the same order.
    m.s_stderr = gram_err_.block(first, first, spec.dim, spec.dim);
    m.hs_stderr = hmat_err_.block(first, first, spec.dim, spec.dim);
    return {std::move(m), std::move(x)};
  }

  /// Fills gram_/hmat_ rows and columns for primitives first..end.
  void extend_matrices(int first) {
    const auto np = static_cast<Eigen::Index>(prims_.size());
    auto grow = [np](auto& m) {
      auto old = m;
      m.setZero(np, np);
      m.topLeftCorner(old.rows(), old.cols()) = old;
    };
    grow(gram_);
    grow(hmat_);
    grow(gram_err_);
    grow(hmat_err_);

    std::vector<std::pair<int, int>> pairs;
    for (int q = first; q < np; ++q)
      for (int p = 0; p <= q; ++p) pairs.emplace_back(p, q);

    const PauliOperator identity = PauliOperator::identity(n_qubits());
    std::vector<std::optional<ShadowEstimate>> est(pairs.size());
    parallel_for(pairs.size(), mode_.workers, [&](std::size_t k) {
      const auto [p, q] = pairs[k];
      const auto& a = prims_[static_cast<std::size_t>(p)];
      const auto& b = prims_[static_cast<std::size_t>(q)];
      if (p == q) {
        // A Trotter step does not commute with H, so <H> drifts along the
        // chain; measure it where possible instead of assuming conservation.
        gram_(p, p) = 1.0;
        hmat_(p, p) = diag_energy_[static_cast<std::size_t>(a.run)];
        if (mode_.kind == QsdModeKind::Exact) {
          hmat_(p, p) = expectation(h_, a.state, a.state).real();
        } else if (mode_.diagonal_shadows) {
          est[k] = run_shadow({a.state, b.state}, p, q, mode_.shadow);
          if (a.k > 0) {
            const ComplexEstimate hh = estimate_offdiagonal(*est[k], h_);
            hmat_(p, p) = hh.value.real();
            hmat_err_(p, p) = hh.stderr();
          }
        }
        return;
      }
      if (mode_.kind == QsdModeKind::Exact) {
        gram_(p, q) = a.state.dot(b.state);
        hmat_(p, q) = expectation(h_, a.state, b.state);
      } else {
        est[k] = run_shadow({a.state, b.state}, p, q, mode_.shadow);
        const ComplexEstimate s = estimate_offdiagonal(*est[k], identity);
        const ComplexEstimate hh = estimate_offdiagonal(*est[k], h_);
        gram_(p, q) = s.value;
        hmat_(p, q) = hh.value;
        gram_err_(p, q) = gram_err_(q, p) = s.stderr();
        hmat_err_(p, q) = hmat_err_(q, p) = hh.stderr();
      }
      gram_(q, p) = std::conj(gram_(p, q));
      hmat_(q, p) = std::conj(hmat_(p, q));
    });
    for (std::size_t k = 0; k < pairs.size(); ++k)
      if (est[k]) shadows_.emplace(pairs[k], std::move(*est[k]));
  }

  PauliOperator h_;
  Propagator prop_;
  QsdMode mode_;
  std::vector<Primitive> prims_;
  std::vector<double> diag_energy_;  // per run
  std::vector<TrialState> levels_;
  MatrixXc gram_, hmat_;
  Eigen::MatrixXd gram_err_, hmat_err_;
  std::map<std::pair<int, int>, ShadowEstimate> shadows_;
  bool sealed_ = false;
};

/// H^s and S of a single run.
inline SubspaceMatrices build_subspace_matrices(const SubspaceSpec& spec, const PauliOperator& h, const VectorXc& phi,
                                                const QsdMode& mode, EvolutionBackend backend = EvolutionBackend::Exact,
                                                double trotter_dt = 0.01) {
  validate(spec);
  if (phi.size() != (Eigen::Index{1} << h.n_qubits())) throw DimensionError("initial state does not match Hamiltonian");
  KrylovChain chain(h, backend, trotter_dt, mode);
  return chain.unsolved_run(spec, phi);
}

inline TrialState ground_trial(const SubspaceSpec& spec, const PauliOperator& h, const VectorXc& phi,
                               const QsdMode& mode, EvolutionBackend backend = EvolutionBackend::Exact,
                               double trotter_dt = 0.01) {
  KrylovChain chain(h, backend, trotter_dt, mode);
  return chain.add_level(spec, phi);
}

/// Solves the levels in order; level k is filtered against levels 0..k-1.
inline std::vector<TrialState> excited_chain(const std::vector<std::pair<SubspaceSpec, VectorXc>>& runs,
                                             const PauliOperator& h, const QsdMode& mode,
                                             EvolutionBackend backend = EvolutionBackend::Exact,
                                             double trotter_dt = 0.01) {
  KrylovChain chain(h, backend, trotter_dt, mode);
  for (const auto& [spec, phi] : runs) chain.add_level(spec, phi);
  return chain.levels();
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

inline nlohmann::json complex_to_json(cplx z) { return nlohmann::json::array({z.real(), z.imag()}); }

inline nlohmann::json matrix_to_json(const MatrixXc& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(complex_to_json(m(r, c)));
    rows.push_back(row);
  }
  return rows;
}

inline std::string to_string(InitialStatePrep::Kind k) {
  switch (k) {
    case InitialStatePrep::Kind::HartreeFock:
      return "hartree-fock";
    case InitialStatePrep::Kind::ExcitationOnHF:
      return "excitation";
    case InitialStatePrep::Kind::Explicit:
      return "explicit";
  }
  return "?";
}

inline nlohmann::json to_json(const TrialState& t) {
  nlohmann::json coeffs = nlohmann::json::array();
  for (Eigen::Index k = 0; k < t.coefficients.size(); ++k) coeffs.push_back(complex_to_json(t.coefficients(k)));
  nlohmann::json prim = nlohmann::json::array();
  for (Eigen::Index k = 0; k < t.primitive_coefficients.size(); ++k)
    prim.push_back(complex_to_json(t.primitive_coefficients(k)));
  std::vector<double> s_eigs(t.solution.s_eigenvalues.data(),
                             t.solution.s_eigenvalues.data() + t.solution.s_eigenvalues.size());
  nlohmann::json spec = {{"dim", t.spec.dim}, {"dt", t.spec.dt}, {"prep", to_string(t.spec.prep.kind)}};
  if (t.spec.prep.kind == InitialStatePrep::Kind::ExcitationOnHF)
    spec["excitation"] = {{"i", t.spec.prep.i}, {"j", t.spec.prep.j}, {"theta", t.spec.prep.theta}};
  return {{"level", t.level},
          {"spec", spec},
          {"mode", t.matrices.provenance == QsdModeKind::Exact ? "exact" : "shadow"},
          {"shots", t.matrices.shots},
          {"threshold", t.solution.threshold},
          {"retained", t.solution.retained},
          {"s_eigenvalues", s_eigs},
          {"energies", t.solution.energies},
          {"energy", t.energy},
          {"energy_stderr", t.energy_stderr},
          {"coefficients", coeffs},
          {"primitive_coefficients", prim},
          {"hs", matrix_to_json(t.matrices.hs)},
          {"s", matrix_to_json(t.matrices.s)}};
}

}  // namespace qegfmc
