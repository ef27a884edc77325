#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "qegfmc/config.hpp"
#include "qegfmc/fngfmc.hpp"
#include "qegfmc/oracle.hpp"
#include "qegfmc/parallel.hpp"
#include "qegfmc/problem.hpp"
#include "qegfmc/qsd.hpp"
#include "qegfmc/stats.hpp"

namespace qegfmc {

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

enum class ProblemKind { Shell, Pauli };

struct RunConfig {
  ProblemKind kind = ProblemKind::Shell;
  std::string interaction_file;
  std::vector<std::string> orbitals;  // empty: every orbital in the file
  Species species = Species::Neutron;
  bool normalized_tbme = true;
  std::string pauli_file;
  BasisConstraints sector;
  MappingScheme scheme = MappingScheme::JordanWigner;

  int level = 1;  // 0 ground, 1 first excited, ...

  int subspace_dim = 4;
  std::vector<double> subspace_dts{0.1};  // one quantum trial per entry; empty: automatic
  std::optional<std::pair<int, int>> excitation;  // level-1 pair; unset: automatic
  double theta = 1.0;

  EvolutionBackend backend = EvolutionBackend::Trotter;
  double trotter_dt = 0.01;
  std::vector<double> sweep_trotter_dts{0.25, 0.1, 0.05, 0.01};

  QsdModeKind qsd_mode = QsdModeKind::Shadow;
  CliffordKind ensemble = CliffordKind::LocalProduct;
  std::vector<long> shots{100000};
  std::uint64_t shadow_seed = 1;
  int repeats = 5;

  FixedNodeParams gfmc;
  bool reference_fallback = true;  // retry with the QSD initial state

  std::string output_dir = "qegfmc_out";
  int workers = 1;

  nlohmann::json echo;  // the key/value pairs as read
};

namespace detail {

inline std::string resolve(const std::string& path, const std::string& base) {
  if (path.empty()) return path;
  std::filesystem::path p(path);
  if (p.is_absolute() || base.empty()) return path;
  return (std::filesystem::path(base) / p).lexically_normal().string();
}

inline Species parse_species(const std::string& s) {
  const auto l = ConfigFile::lower(s);
  if (l == "neutron" || l == "n") return Species::Neutron;
  if (l == "proton" || l == "p") return Species::Proton;
  if (l == "both" || l == "pn") return Species::Both;
  throw ConfigError("unknown species '" + s + "'");
}

inline std::string to_string(Species s) {
  return s == Species::Neutron ? "neutron" : s == Species::Proton ? "proton" : "both";
}

}  // namespace detail

/// Reads a RunConfig. Relative paths are taken relative to `base_dir`;
/// unknown keys are rejected.
inline RunConfig load_run_config(const ConfigFile& c, const std::string& base_dir = "") {
  RunConfig r;
  const auto kind = ConfigFile::lower(c.get("problem.kind", "shell"));
  if (kind == "shell")
    r.kind = ProblemKind::Shell;
  else if (kind == "pauli")
    r.kind = ProblemKind::Pauli;
  else
    throw ConfigError("problem.kind must be 'shell' or 'pauli'");
  if (r.kind == ProblemKind::Shell) {
    r.interaction_file = detail::resolve(c.require("interaction.file"), base_dir);
    r.orbitals = c.get_list("interaction.orbitals");
    r.species = detail::parse_species(c.get("interaction.species", "neutron"));
    r.normalized_tbme = c.get_bool("interaction.normalized_tbme", true);
  } else {
    r.pauli_file = detail::resolve(c.require("pauli.file"), base_dir);
  }
  r.sector.particles = c.find_number<int>("sector.particles");
  r.sector.total_m2 = c.find_number<int>("sector.m2");
  r.sector.total_tz2 = c.find_number<int>("sector.tz2");
  r.scheme = parse_mapping_scheme(c.get("mapping.scheme", "jw"));

  r.level = c.get_number<int>("target.level", 1);
  if (r.level < 0) throw ConfigError("target.level must be nonnegative");

  r.subspace_dim = c.get_number<int>("subspace.dim", 4);
  if (ConfigFile::lower(c.get("subspace.dt", "")) == "auto")
    r.subspace_dts.clear();
  else
    r.subspace_dts = c.get_number_list<double>("subspace.dt", {0.1});
  if (auto ex = c.get_list("subspace.excitation"); !ex.empty()) {
    if (ex.size() != 2) throw ConfigError("subspace.excitation expects 'i, j'");
    ConfigFile tmp;
    tmp.set("i=" + ex[0]);
    tmp.set("j=" + ex[1]);
    r.excitation = std::make_pair(tmp.get_number<int>("i", 0), tmp.get_number<int>("j", 0));
  }
  r.theta = c.get_number<double>("subspace.theta", 1.0);

  r.backend = parse_evolution_backend(c.get("evolution.backend", "trotter"));
  r.trotter_dt = c.get_number<double>("evolution.trotter_dt", 0.01);
  r.sweep_trotter_dts = c.get_number_list<double>("sweep.trotter_dt", r.sweep_trotter_dts);

  const auto mode = ConfigFile::lower(c.get("qsd.mode", "shadow"));
  if (mode == "shadow")
    r.qsd_mode = QsdModeKind::Shadow;
  else if (mode == "exact")
    r.qsd_mode = QsdModeKind::Exact;
  else
    throw ConfigError("qsd.mode must be 'exact' or 'shadow'");
  r.ensemble = parse_clifford_kind(c.get("shadow.ensemble", "local"));
  r.shots = c.get_number_list<long>("shadow.shots", r.shots);
  r.shadow_seed = c.get_number<std::uint64_t>("shadow.seed", 1);
  r.repeats = c.get_number<int>("shadow.repeats", 5);

  const auto lambda = c.get("gfmc.lambda", "auto");
  if (ConfigFile::lower(lambda) != "auto") r.gfmc.lambda = c.get_number<double>("gfmc.lambda", 0.0);
  r.gfmc.gamma = c.get_number<double>("gfmc.gamma", 0.0);
  r.gfmc.n_walkers = c.get_number<int>("gfmc.walkers", 1000);
  r.gfmc.n_steps = c.get_number<long>("gfmc.steps", 1100);
  r.gfmc.equilibration_steps = c.get_number<long>("gfmc.equilibration", -1);
  r.gfmc.seed = c.get_number<std::uint64_t>("gfmc.seed", 1);
  r.gfmc.population_control = c.get_bool("gfmc.population_control", true);
  r.reference_fallback = c.get_bool("gfmc.reference_fallback", true);

  r.output_dir = detail::resolve(c.get("output.dir", "qegfmc_out"), "");
  r.workers = c.get_number<int>("workers", 1);

  if (auto unused = c.unused_keys(); !unused.empty()) throw ConfigError("unknown config key '" + unused.front() + "'");

  if (r.subspace_dim < 1) throw ConfigError("subspace.dim must be at least 1");
  for (double dt : r.subspace_dts)
    if (!(dt > 0.0)) throw ConfigError("subspace.dt entries must be positive");
  if (!(r.trotter_dt > 0.0)) throw ConfigError("evolution.trotter_dt must be positive");
  for (double dt : r.sweep_trotter_dts)
    if (!(dt > 0.0)) throw ConfigError("sweep.trotter_dt entries must be positive");
  for (long s : r.shots)
    if (s < 1) throw ConfigError("shadow.shots entries must be positive");
  if (r.repeats < 1) throw ConfigError("shadow.repeats must be positive");
  if (r.workers < 1) throw ConfigError("workers must be positive");
  validate(r.gfmc);
  r.gfmc.workers = r.workers;
  validate(r.gfmc);

  r.echo = nlohmann::json::object();
  for (const auto& [k, v] : c.values()) r.echo[k] = v;
  return r;
}

inline RunConfig load_run_config_file(const std::string& path, const std::vector<std::string>& overrides = {}) {
  ConfigFile c = ConfigFile::parse_file(path);
  for (const auto& o : overrides) c.set(o);
  if (!c.has("workers")) c.set("workers=" + std::to_string(worker_count()));
  return load_run_config(c, std::filesystem::path(path).parent_path().string());
}

// ---------------------------------------------------------------------------
// Problem
// ---------------------------------------------------------------------------

/// Qubit Hamiltonian, its restriction to a sector of configurations, and
/// the map between the two.
struct PipelineProblem {
  std::string description;
  PauliOperator qubit_h;
  SparseHamiltonian sector_h;
  std::vector<Bits> configs;      // sector basis, occupation layout
  std::vector<Bits> qubit_index;  // register index of each sector state
  FermionRegister reg;
  int hf = 0;  // sector index of the Hartree-Fock configuration

  int n_qubits() const { return qubit_h.n_qubits(); }
  int dim() const { return sector_h.dim(); }

  VectorXc to_sector(const VectorXc& q) const {
    VectorXc out(dim());
    for (int k = 0; k < dim(); ++k) out(k) = q(static_cast<Eigen::Index>(qubit_index[static_cast<std::size_t>(k)]));
    return out;
  }

  VectorXc from_sector(const VectorXc& s) const {
    VectorXc out = VectorXc::Zero(Eigen::Index{1} << n_qubits());
    for (int k = 0; k < dim(); ++k) out(static_cast<Eigen::Index>(qubit_index[static_cast<std::size_t>(k)])) = s(k);
    return out;
  }

  VectorXc hf_sector() const {
    VectorXc v = VectorXc::Zero(dim());
    v(hf) = 1.0;
    return v;
  }

  int index_of(Bits config) const {
    auto it = std::lower_bound(configs.begin(), configs.end(), config);
    return (it != configs.end() && *it == config) ? static_cast<int>(it - configs.begin()) : -1;
  }
};

inline PipelineProblem problem_from_shell(const ShellProblem& sp, std::string description) {
  PipelineProblem p;
  p.description = std::move(description);
  p.qubit_h = sp.qubit_hamiltonian;
  p.sector_h = sp.sector_hamiltonian;
  p.configs = sp.basis.states();
  p.reg = sp.reg;
  const FermionEncoding enc(sp.n_qubits(), sp.reg.scheme);
  for (Bits x : p.configs) p.qubit_index.push_back(enc.encode(x));
  p.hf = p.index_of(hartree_fock_configuration(p.reg));
  if (p.hf < 0) throw NumericalError("Hartree-Fock configuration is outside the sector");
  return p;
}

/// Pauli-sum file: one term per line, `coefficient LETTERS`; `#` comments.
inline PauliOperator parse_pauli_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open Pauli file " + path);
  std::optional<PauliOperator> op;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    double c = 0.0;
    std::string letters;
    if (!(ss >> c)) {
      if (ConfigFile::trim(line).empty()) continue;
      throw ParseError(path + ": expected 'coefficient LETTERS'", number);
    }
    if (!(ss >> letters)) throw ParseError(path + ": missing Pauli letters", number);
    std::string extra;
    if (ss >> extra) throw ParseError(path + ": trailing text '" + extra + "'", number);
    if (!op) op.emplace(static_cast<int>(letters.size()));
    if (static_cast<int>(letters.size()) != op->n_qubits()) throw ParseError(path + ": inconsistent qubit count", number);
    try {
      op->add(PauliString::from_letters(letters), c);
    } catch (const Error& e) {
      throw ParseError(path + ": " + e.what(), number);
    }
  }
  if (!op) throw ConfigError("Pauli file " + path + " has no terms");
  return *op;
}

/// Pauli toy: modes are qubits (Jordan-Wigner), the sector is every
/// bitstring with the requested particle count (all of them when unset),
/// and the reference configuration is the lowest diagonal entry.
inline PipelineProblem problem_from_pauli(const PauliOperator& h, const BasisConstraints& sector,
                                          std::string description) {
  const int n = h.n_qubits();
  if (n > kMaxDenseQubits) throw DimensionError("Pauli toy limited to " + std::to_string(kMaxDenseQubits) + " qubits");
  if (sector.total_m2 || sector.total_tz2) throw ConfigError("Pauli problems only support sector.particles");
  const MatrixXc dense = h.to_dense();
  if (dense.imag().cwiseAbs().maxCoeff() > 1e-12) throw ConfigError("GFMC needs a real Hamiltonian matrix");
  PipelineProblem p;
  p.description = std::move(description);
  p.qubit_h = h;
  p.reg.n_modes = n;
  p.reg.scheme = MappingScheme::JordanWigner;
  const FermionEncoding enc(n, MappingScheme::JordanWigner);
  std::vector<Bits> configs;
  for (Bits x = 0; x < (Bits{1} << n); ++x)
    if (!sector.particles || std::popcount(x) == *sector.particles) configs.push_back(x);
  if (configs.empty()) throw ConfigError("empty sector");
  p.configs = configs;
  for (Bits x : configs) p.qubit_index.push_back(enc.encode(x));
  Eigen::MatrixXd m(configs.size(), configs.size());
  for (std::size_t a = 0; a < configs.size(); ++a)
    for (std::size_t b = 0; b < configs.size(); ++b)
      m(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
          dense(static_cast<Eigen::Index>(p.qubit_index[a]), static_cast<Eigen::Index>(p.qubit_index[b])).real();
  p.sector_h = SparseHamiltonian::from_dense(m);
  p.reg.particles = sector.particles ? *sector.particles : std::popcount(configs.front());
  p.reg.sector = configs;
  int best = 0;
  for (int k = 1; k < p.sector_h.dim(); ++k)
    if (p.sector_h.diagonal(k) < p.sector_h.diagonal(best) - 1e-12) best = k;
  p.hf = best;
  return p;
}

inline PipelineProblem build_problem(const RunConfig& cfg) {
  if (cfg.kind == ProblemKind::Pauli) return problem_from_pauli(parse_pauli_file(cfg.pauli_file), cfg.sector, cfg.pauli_file);
  if (!std::filesystem::exists(cfg.interaction_file))
    throw ConfigError("interaction file not found: " + cfg.interaction_file);
  InteractionData data = parse_interaction_file(cfg.interaction_file);
  if (!cfg.orbitals.empty()) data = restrict_orbitals(data, cfg.orbitals);
  HamiltonianOptions opts;
  opts.normalized_tbme = cfg.normalized_tbme;
  const auto sp = make_shell_problem(std::move(data), cfg.species, cfg.sector, cfg.scheme, opts);
  return problem_from_shell(sp, cfg.interaction_file);
}

// ---------------------------------------------------------------------------
// Initial and classical trial states
// ---------------------------------------------------------------------------

/// Single-pair excitations of the reference configuration that stay in the
/// sector, ordered by the diagonal energy of the excited configuration.
inline std::vector<std::pair<int, int>> ranked_excitations(const PipelineProblem& p) {
  const int n = p.reg.n_modes;
  const Bits hf = p.configs[static_cast<std::size_t>(p.hf)];
  std::vector<std::tuple<double, int, int>> found;
  for (int i = 0; i < n; ++i) {
    if (!test_qubit(hf, n, i)) continue;
    for (int j = 0; j < n; ++j) {
      if (test_qubit(hf, n, j)) continue;
      const Bits x = (hf & ~qubit_bit(n, i)) | qubit_bit(n, j);
      const int k = p.index_of(x);
      if (k >= 0) found.emplace_back(p.sector_h.diagonal(k), i, j);
    }
  }
  std::sort(found.begin(), found.end());
  std::vector<std::pair<int, int>> out;
  for (const auto& [e, i, j] : found) out.emplace_back(i, j);
  return out;
}

/// Qubit register HF state, and exp(theta G_ij) applied to it.
/// Krylov time steps of the run. `auto` spreads the phases of the sector
/// spectrum over the unit circle, with the width bounded by Gershgorin discs.
inline std::vector<double> subspace_time_steps(const RunConfig& cfg, const PipelineProblem& p) {
  if (!cfg.subspace_dts.empty()) return cfg.subspace_dts;
  const double width = p.sector_h.gershgorin_width();
  if (!(width > 0.0)) return {1.0};
  return {full_circle_time_step(width, cfg.subspace_dim)};
}

inline VectorXc hf_qubits(const PipelineProblem& p) { return p.from_sector(p.hf_sector()); }

inline VectorXc excited_initial_qubits(const PipelineProblem& p, int i, int j, double theta) {
  if (p.n_qubits() > 12) throw DimensionError("excitation is exponentiated densely; at most 12 modes");
  const MatrixXc a = theta * excitation_generator(p.reg, i, j).to_dense();
  return (a.exp() * hf_qubits(p)).normalized();
}

/// Pair used for `level` (1-based among excited levels).
inline std::pair<int, int> excitation_for(const PipelineProblem& p, const RunConfig& cfg, int level) {
  if (level == 1 && cfg.excitation) return *cfg.excitation;
  const auto ranked = ranked_excitations(p);
  if (static_cast<int>(ranked.size()) < level) throw ConfigError("sector has too few single excitations for the target level");
  return ranked[static_cast<std::size_t>(level - 1)];
}

/// Initial states of levels 0..cfg.level in qubit space.
inline std::vector<VectorXc> level_initial_states(const PipelineProblem& p, const RunConfig& cfg) {
  std::vector<VectorXc> out{hf_qubits(p)};
  for (int l = 1; l <= cfg.level; ++l) {
    const auto [i, j] = excitation_for(p, cfg, l);
    out.push_back(excited_initial_qubits(p, i, j, cfg.theta));
  }
  return out;
}

/// Classical trial of a level in the sector basis: the level's initial
/// state with the lower classical trials projected out.
inline VectorXc classical_trial(const PipelineProblem& p, const RunConfig& cfg) {
  const auto init = level_initial_states(p, cfg);
  std::vector<VectorXc> lower;
  VectorXc v;
  for (std::size_t l = 0; l < init.size(); ++l) {
    v = p.to_sector(init[l]);
    for (const auto& u : lower) v -= u * u.dot(v);
    if (v.norm() < 1e-10) throw NumericalError("classical filter annihilates the level-" + std::to_string(l) + " state");
    v.normalize();
    lower.push_back(v);
  }
  return v;
}

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

/// An error with the pipeline stage it came from.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what, int exit_code)
      : Error(stage + ": " + what), stage_(std::move(stage)), code_(exit_code) {}
  const std::string& stage() const { return stage_; }
  int exit_code() const { return code_; }

 private:
  std::string stage_;
  int code_;
};

/// 2 for configuration and input problems, 3 for numerical reliability.
inline int exit_code_for(const std::exception& e) {
  if (auto s = dynamic_cast<const StageError*>(&e)) return s->exit_code();
  if (dynamic_cast<const NumericalError*>(&e)) return 3;
  if (dynamic_cast<const Error*>(&e)) return 2;
  return 1;
}

template <class F>
auto run_stage(const std::string& stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what(), exit_code_for(e));
  }
}

struct OracleResult {
  std::vector<double> energies;
  MatrixXc vectors;  // sector basis
};

inline OracleResult run_oracle(const PipelineProblem& p, int levels) {
  auto s = oracle::exact_spectrum(p.sector_h, std::max(levels, 1), true);
  if (static_cast<int>(s.eigenvalues.size()) < levels) throw ConfigError("sector is smaller than the target level");
  return {s.eigenvalues, *s.eigenvectors};
}

/// One QSD chain up to the target level and the pieces the estimator needs.
struct QuantumTrial {
  double dt = 0.0;
  std::vector<TrialState> levels;
  std::optional<VectorXc> exact_vector;     // qubit space, exact mode
  std::optional<ShadowOperator> density;    // shadow mode
  VectorXc initial_qubits;                  // the target level's QSD initial state
  QsdModeKind mode = QsdModeKind::Exact;
  long shots = 0;

  /// rho_T phi_ref in the sector basis.
  VectorXc rho_times(const PipelineProblem& p, const VectorXc& ref_qubits) const {
    if (exact_vector) return p.to_sector(*exact_vector * exact_vector->dot(ref_qubits));
    return p.to_sector(density->apply(ref_qubits));
  }

  const TrialState& target() const { return levels.back(); }
};

/// Shot count of single runs: the largest entry of shadow.shots.
inline long production_shots(const RunConfig& cfg) { return *std::max_element(cfg.shots.begin(), cfg.shots.end()); }

inline QsdMode qsd_mode_for(const RunConfig& cfg, QsdModeKind kind, long shots, std::uint64_t seed) {
  QsdMode m = kind == QsdModeKind::Exact ? QsdMode::exact() : QsdMode::shadow_mode(shots, seed, cfg.ensemble);
  m.diagonal_shadows = kind == QsdModeKind::Shadow;
  m.workers = cfg.workers;
  return m;
}

inline QuantumTrial run_qsd(const PipelineProblem& p, const RunConfig& cfg, double dt, const QsdMode& mode,
                            EvolutionBackend backend, double trotter_dt) {
  const auto init = level_initial_states(p, cfg);
  KrylovChain chain(p.qubit_h, backend, trotter_dt, mode);
  QuantumTrial q;
  q.dt = dt;
  q.mode = mode.kind;
  q.shots = mode.kind == QsdModeKind::Shadow ? mode.shadow.shots : 0;
  for (std::size_t l = 0; l < init.size(); ++l) {
    SubspaceSpec spec;
    spec.dim = cfg.subspace_dim;
    spec.dt = dt;
    spec.prep = InitialStatePrep::explicit_state(init[l]);
    chain.add_level(spec, init[l]);
  }
  q.levels = chain.levels();
  q.initial_qubits = init.back();
  const int target = static_cast<int>(init.size()) - 1;
  if (mode.kind == QsdModeKind::Exact) {
    VectorXc v = chain.trial_vector(target);
    q.exact_vector = v / v.norm();
  } else {
    q.density = chain.trial_density(target);
  }
  return q;
}

struct GfmcRun {
  std::string label;
  FngfmcResult result;
  std::string reference = "none";
};

/// Quantum-trial GFMC with phi_ref = HF, retried with the QSD initial state
/// when the denominator is not statistically nonzero.
inline GfmcRun run_quantum_gfmc(const PipelineProblem& p, const RunConfig& cfg, const QuantumTrial& q,
                                const VectorXc& initial_sector, const std::string& label) {
  GfmcRun run;
  run.label = label;
  run.reference = "hartree_fock";
  run.result = run_fngfmc(p.sector_h, cfg.gfmc, TrialStateHandle::quantum(q.rho_times(p, hf_qubits(p))), initial_sector);
  if (!run.result.energy.reliable && cfg.reference_fallback) {
    run.reference = "qsd_initial";
    run.result =
        run_fngfmc(p.sector_h, cfg.gfmc, TrialStateHandle::quantum(q.rho_times(p, q.initial_qubits)), initial_sector);
  }
  return run;
}

inline GfmcRun run_classical_gfmc(const PipelineProblem& p, const RunConfig& cfg, const VectorXc& trial,
                                  const VectorXc& initial_sector) {
  GfmcRun run;
  run.label = "classical";
  run.result = run_fngfmc(p.sector_h, cfg.gfmc, TrialStateHandle::classical(trial), initial_sector);
  return run;
}

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

namespace detail {

inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + path.string());
  f << text;
}

/// Evenly spaced measured-step checkpoints, always ending at the last step.
inline std::vector<std::size_t> checkpoints(std::size_t n, std::size_t count = 20) {
  std::vector<std::size_t> out;
  for (std::size_t c = 1; c <= count; ++c) {
    const std::size_t k = std::max<std::size_t>(1, n * c / count);
    if (out.empty() || out.back() != k) out.push_back(k);
  }
  return out;
}

}  // namespace detail

inline nlohmann::json to_json(const GfmcRun& r, double exact) {
  nlohmann::json j = to_json(r.result);
  j["label"] = r.label;
  j["reference"] = r.reference;
  j["bias"] = r.result.energy.value - exact;
  return j;
}

/// Rows `curve,subspace_dt,step,samples,energy,stderr,reliable`; the oracle
/// line uses curve `exact` with zero stderr and samples.
inline std::string energy_vs_step_csv(const std::vector<GfmcRun>& runs, const std::vector<double>& dts, double exact,
                                      long equilibration) {
  std::ostringstream out;
  out << "# qegfmc energy-vs-step v1\n";
  out << "curve,subspace_dt,step,samples,energy,stderr,reliable\n";
  std::vector<std::size_t> marks;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const auto& series = runs[r].result.series;
    marks = detail::checkpoints(series.size());
    for (std::size_t k : marks) {
      const std::vector<StepTally> prefix(series.begin(), series.begin() + static_cast<std::ptrdiff_t>(k));
      const auto e = estimate_from_tallies(prefix);
      out << runs[r].label << ',' << (r < dts.size() && !std::isnan(dts[r]) ? detail::fmt(dts[r]) : "") << ','
          << (equilibration + static_cast<long>(k)) << ',' << e.n_samples << ',' << detail::fmt(e.value) << ','
          << detail::fmt(e.stderr) << ',' << (e.reliable ? 1 : 0) << '\n';
    }
  }
  for (std::size_t k : marks)
    out << "exact,," << (equilibration + static_cast<long>(k)) << ",0," << detail::fmt(exact) << ",0,1\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

struct PipelineResult {
  nlohmann::json summary;
  std::vector<GfmcRun> runs;  // classical first, then one per subspace dt
  OracleResult oracle;
  bool reliable = true;
};

/// Builds the problem, the oracle, one quantum trial per subspace dt, and
/// classical- and quantum-trial GFMC runs sharing the walker seed. Writes
/// energy_vs_step.csv and summary.json to cfg.output_dir; the summary is
/// written even when a stage fails.
inline PipelineResult run_pipeline(const RunConfig& cfg) {
  PipelineResult res;
  auto& s = res.summary;
  s["config"] = cfg.echo;
  s["stages_completed"] = nlohmann::json::array();
  std::filesystem::create_directories(cfg.output_dir);
  const std::filesystem::path dir(cfg.output_dir);
  auto flush = [&] { detail::write_text(dir / "summary.json", s.dump(2) + "\n"); };

  try {
    const auto p = run_stage("build-ham", [&] { return build_problem(cfg); });
    s["problem"] = {{"source", p.description},
                    {"qubits", p.n_qubits()},
                    {"sector_dim", p.dim()},
                    {"pauli_terms", p.qubit_h.size()},
                    {"hartree_fock_index", p.hf}};
    s["stages_completed"].push_back("build-ham");

    res.oracle = run_stage("exact", [&] { return run_oracle(p, cfg.level + 1); });
    const double exact = res.oracle.energies[static_cast<std::size_t>(cfg.level)];
    s["exact"] = {{"energies", res.oracle.energies}, {"target_level", cfg.level}, {"target_energy", exact}};
    s["stages_completed"].push_back("exact");

    std::vector<QuantumTrial> trials;
    run_stage("qsd", [&] {
      s["qsd"] = nlohmann::json::array();
      const auto dts = subspace_time_steps(cfg, p);
      for (std::size_t d = 0; d < dts.size(); ++d) {
        const auto mode =
            qsd_mode_for(cfg, cfg.qsd_mode, production_shots(cfg), substream_seed(cfg.shadow_seed, {0x717364ull, d}));
        trials.push_back(run_qsd(p, cfg, dts[d], mode, cfg.backend, cfg.trotter_dt));
        const auto& t = trials.back();
        nlohmann::json j = to_json(t.target());
        j["subspace_dt"] = t.dt;
        j["level_energies"] = nlohmann::json::array();
        for (const auto& l : t.levels) j["level_energies"].push_back(l.energy);
        if (t.exact_vector) {
          const VectorXc v = p.to_sector(*t.exact_vector);
          j["fidelity"] = std::norm(res.oracle.vectors.col(cfg.level).dot(v));
        }
        s["qsd"].push_back(j);
      }
      return 0;
    });
    s["stages_completed"].push_back("qsd");

    run_stage("gfmc", [&] {
      const VectorXc trial = classical_trial(p, cfg);
      const VectorXc initial = trial;
      res.runs.push_back(run_classical_gfmc(p, cfg, trial, initial));
      for (std::size_t d = 0; d < trials.size(); ++d)
        res.runs.push_back(
            run_quantum_gfmc(p, cfg, trials[d], initial, "quantum_" + std::to_string(d)));
      s["gfmc"] = nlohmann::json::array();
      for (const auto& r : res.runs) {
        s["gfmc"].push_back(to_json(r, exact));
        res.reliable = res.reliable && r.result.energy.reliable;
      }
      std::vector<double> dts{std::nan("")};
      for (const auto& t : trials) dts.push_back(t.dt);
      detail::write_text(dir / "energy_vs_step.csv",
                         energy_vs_step_csv(res.runs, dts, exact, cfg.gfmc.equilibration()));
      return 0;
    });
    s["stages_completed"].push_back("gfmc");
    s["reliable"] = res.reliable;
  } catch (const StageError& e) {
    s["error"] = {{"stage", e.stage()}, {"message", e.what()}, {"exit_code", e.exit_code()}};
    flush();
    throw;
  }
  flush();
  return res;
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

struct SweepRow {
  double setting = 0.0;  // shots or Trotter step
  int repeats = 0;
  double energy = 0.0;   // mean over repeats
  double spread = 0.0;   // standard deviation over repeats
  double stderr = 0.0;   // mean GFMC stderr
  long samples = 0;      // per run
  double reference = 0.0;         // exact-mode trial (shots) or exact backend (Trotter)
  double reference_stderr = 0.0;
  double exact = 0.0;             // oracle
  double qsd_energy = 0.0;        // mean target-level QSD energy
  double qsd_reference = 0.0;
  bool reliable = true;

  /// Band of two repeated-seed standard deviations about the mean.
  double band_low() const { return energy - 2.0 * spread; }
  double band_high() const { return energy + 2.0 * spread; }
};

namespace detail {

inline FixedNodeParams repeat_params(const FixedNodeParams& base, int r) {
  FixedNodeParams p = base;
  p.seed = substream_seed(base.seed, {0x72657074ull, static_cast<std::uint64_t>(r)});
  return p;
}

inline std::string sweep_csv(const std::string& name, const std::string& setting, const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "# qegfmc " << name << " v1\n";
  out << setting
      << ",repeats,energy,spread,band_low,band_high,stderr,samples,reference,reference_stderr,abs_diff,exact,"
         "qsd_energy,qsd_reference,reliable\n";
  for (const auto& r : rows)
    out << fmt(r.setting) << ',' << r.repeats << ',' << fmt(r.energy) << ',' << fmt(r.spread) << ','
        << fmt(r.band_low()) << ',' << fmt(r.band_high()) << ',' << fmt(r.stderr) << ',' << r.samples << ','
        << fmt(r.reference) << ',' << fmt(r.reference_stderr) << ',' << fmt(std::abs(r.energy - r.reference)) << ','
        << fmt(r.exact) << ',' << fmt(r.qsd_energy) << ',' << fmt(r.qsd_reference) << ',' << (r.reliable ? 1 : 0)
        << '\n';
  return out.str();
}

}  // namespace detail

/// One row per shot count: `repeats` shadow reconstructions with fresh
/// shadow seeds, each fed to GFMC with the common walker seed, against the
/// exact-mode trial run with the same seed.
inline std::vector<SweepRow> sweep_shots(const RunConfig& cfg, const std::string& csv_path = "") {
  const auto p = run_stage("build-ham", [&] { return build_problem(cfg); });
  const auto orc = run_stage("exact", [&] { return run_oracle(p, cfg.level + 1); });
  const double exact = orc.energies[static_cast<std::size_t>(cfg.level)];
  const double dt = subspace_time_steps(cfg, p).front();
  const VectorXc initial = run_stage("gfmc", [&] { return classical_trial(p, cfg); });

  const auto ref_trial = run_stage(
      "qsd", [&] { return run_qsd(p, cfg, dt, qsd_mode_for(cfg, QsdModeKind::Exact, 0, 0), cfg.backend, cfg.trotter_dt); });
  const auto ref = run_stage("gfmc", [&] { return run_quantum_gfmc(p, cfg, ref_trial, initial, "exact_trial"); });

  std::vector<SweepRow> rows;
  for (long shots : cfg.shots) {
    SweepRow row;
    row.setting = static_cast<double>(shots);
    row.repeats = cfg.repeats;
    row.exact = exact;
    row.reference = ref.result.energy.value;
    row.reference_stderr = ref.result.energy.stderr;
    row.qsd_reference = ref_trial.target().energy;
    std::vector<double> es, qs;
    double se = 0.0;
    for (int r = 0; r < cfg.repeats; ++r) {
      const auto seed = substream_seed(cfg.shadow_seed, {static_cast<std::uint64_t>(shots), static_cast<std::uint64_t>(r)});
      const auto q = run_stage("qsd", [&] {
        return run_qsd(p, cfg, dt, qsd_mode_for(cfg, QsdModeKind::Shadow, shots, seed), cfg.backend, cfg.trotter_dt);
      });
      const auto g = run_stage("gfmc", [&] { return run_quantum_gfmc(p, cfg, q, initial, "quantum"); });
      es.push_back(g.result.energy.value);
      qs.push_back(q.target().energy);
      se += g.result.energy.stderr / cfg.repeats;
      row.samples = g.result.energy.n_samples;
      row.reliable = row.reliable && g.result.energy.reliable;
    }
    row.energy = stats::mean(es);
    row.spread = std::sqrt(stats::variance(es));
    row.stderr = se;
    row.qsd_energy = stats::mean(qs);
    rows.push_back(row);
  }
  if (!csv_path.empty()) detail::write_text(csv_path, detail::sweep_csv("sweep-shots", "shots", rows));
  return rows;
}

/// One row per Trotter step: QSD with the Trotter backend, GFMC repeated
/// over `repeats` walker seeds, paired with the exact-backend trial on the
/// same seeds. Shadow mode draws fresh shadow seeds per repeat.
inline std::vector<SweepRow> sweep_trotter(const RunConfig& cfg, const std::string& csv_path = "") {
  const auto p = run_stage("build-ham", [&] { return build_problem(cfg); });
  const auto orc = run_stage("exact", [&] { return run_oracle(p, cfg.level + 1); });
  const double exact = orc.energies[static_cast<std::size_t>(cfg.level)];
  const double dt = subspace_time_steps(cfg, p).front();
  const VectorXc initial = run_stage("gfmc", [&] { return classical_trial(p, cfg); });

  auto measure = [&](EvolutionBackend backend, double trotter_dt, std::vector<double>& energies,
                     std::vector<double>& qsd, double& stderr_mean, long& samples, bool& reliable) {
    for (int r = 0; r < cfg.repeats; ++r) {
      const auto seed = substream_seed(cfg.shadow_seed, {0x74726f74ull, static_cast<std::uint64_t>(r)});
      const auto q = run_stage("qsd", [&] {
        return run_qsd(p, cfg, dt, qsd_mode_for(cfg, cfg.qsd_mode, production_shots(cfg), seed), backend, trotter_dt);
      });
      RunConfig rc = cfg;
      rc.gfmc = detail::repeat_params(cfg.gfmc, r);
      const auto g = run_stage("gfmc", [&] { return run_quantum_gfmc(p, rc, q, initial, "quantum"); });
      energies.push_back(g.result.energy.value);
      qsd.push_back(q.target().energy);
      stderr_mean += g.result.energy.stderr / cfg.repeats;
      samples = g.result.energy.n_samples;
      reliable = reliable && g.result.energy.reliable;
    }
  };

  std::vector<double> ref_e, ref_q;
  double ref_se = 0.0;
  long ref_samples = 0;
  bool ref_ok = true;
  measure(EvolutionBackend::Exact, cfg.trotter_dt, ref_e, ref_q, ref_se, ref_samples, ref_ok);

  std::vector<SweepRow> rows;
  for (double tdt : cfg.sweep_trotter_dts) {
    SweepRow row;
    row.setting = tdt;
    row.repeats = cfg.repeats;
    row.exact = exact;
    row.reference = stats::mean(ref_e);
    row.reference_stderr = ref_se;
    row.qsd_reference = stats::mean(ref_q);
    std::vector<double> es, qs;
    measure(EvolutionBackend::Trotter, tdt, es, qs, row.stderr, row.samples, row.reliable);
    row.energy = stats::mean(es);
    row.spread = std::sqrt(stats::variance(es));
    row.qsd_energy = stats::mean(qs);
    rows.push_back(row);
  }
  if (!csv_path.empty()) detail::write_text(csv_path, detail::sweep_csv("sweep-trotter", "trotter_dt", rows));
  return rows;
}

}  // namespace qegfmc
