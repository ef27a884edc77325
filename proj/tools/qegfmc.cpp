// qegfmc: command-line runner for the shell-model / QSD / fnGFMC pipeline.
//
// Every subcommand reads a flat key = value config (--config) with optional
// --set key=value overrides. Exit codes: 0 ok, 2 configuration or input
// error, 3 numerical-reliability failure.

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "qegfmc/pipeline.hpp"

namespace {

using namespace qegfmc;

struct Common {
  std::string config;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config, "config file (key = value)")->required()->check(CLI::ExistingFile);
  cmd->add_option("-s,--set", c.overrides, "override a config key, key=value (repeatable)");
}

RunConfig load(const Common& c) {
  return run_stage("config", [&] { return load_run_config_file(c.config, c.overrides); });
}

std::filesystem::path output_path(const RunConfig& cfg, const std::string& name) {
  std::filesystem::create_directories(cfg.output_dir);
  return std::filesystem::path(cfg.output_dir) / name;
}

void emit(const nlohmann::json& j, const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write " + path.string());
  f << j.dump(2) << '\n';
  std::cout << j.dump(2) << '\n';
}

int cmd_build_ham(const Common& c, const std::string& pauli_out) {
  const auto cfg = load(c);
  const auto p = run_stage("build-ham", [&] { return build_problem(cfg); });
  nlohmann::json j = {{"source", p.description},
                      {"qubits", p.n_qubits()},
                      {"sector_dim", p.dim()},
                      {"sector_nonzeros", p.sector_h.nonzeros()},
                      {"sector_asymmetry", p.sector_h.asymmetry()},
                      {"pauli_terms", p.qubit_h.size()},
                      {"hartree_fock_index", p.hf},
                      {"mapping", to_string(p.reg.scheme)}};
  if (!pauli_out.empty()) {
    std::ofstream f(pauli_out);
    if (!f) throw ConfigError("cannot write " + pauli_out);
    f << "# qegfmc pauli v1: coefficient LETTERS (imaginary parts are zero for a Hermitian sum)\n";
    f.precision(17);
    for (const auto& [s, coeff] : p.qubit_h.terms()) f << coeff.real() << ' ' << s.letters() << '\n';
  }
  emit(j, output_path(cfg, "hamiltonian.json"));
  return 0;
}

int cmd_exact(const Common& c, int count) {
  const auto cfg = load(c);
  const auto p = run_stage("build-ham", [&] { return build_problem(cfg); });
  const int k = count > 0 ? count : cfg.level + 1;
  const auto r = run_stage("exact", [&] { return oracle::exact_spectrum(p.sector_h, k); });
  emit({{"sector_dim", p.dim()}, {"energies", r.eigenvalues}}, output_path(cfg, "exact.json"));
  return 0;
}

int cmd_qsd(const Common& c) {
  const auto cfg = load(c);
  const auto p = run_stage("build-ham", [&] { return build_problem(cfg); });
  nlohmann::json out = nlohmann::json::array();
  run_stage("qsd", [&] {
    const auto dts = subspace_time_steps(cfg, p);
    for (std::size_t d = 0; d < dts.size(); ++d) {
      const auto mode =
          qsd_mode_for(cfg, cfg.qsd_mode, production_shots(cfg), substream_seed(cfg.shadow_seed, {0x717364ull, d}));
      const auto q = run_qsd(p, cfg, dts[d], mode, cfg.backend, cfg.trotter_dt);
      nlohmann::json levels = nlohmann::json::array();
      for (const auto& l : q.levels) levels.push_back(to_json(l));
      out.push_back({{"subspace_dt", q.dt}, {"levels", levels}});
    }
    return 0;
  });
  emit(out, output_path(cfg, "qsd.json"));
  return 0;
}

int cmd_gfmc(const Common& c, const std::string& trajectory) {
  const auto cfg = load(c);
  const auto p = run_stage("build-ham", [&] { return build_problem(cfg); });
  const auto orc = run_stage("exact", [&] { return run_oracle(p, cfg.level + 1); });
  const auto r = run_stage("gfmc", [&] {
    const VectorXc trial = classical_trial(p, cfg);
    return run_fngfmc(p.sector_h, cfg.gfmc, TrialStateHandle::classical(trial), trial, {trajectory});
  });
  nlohmann::json j = to_json(r);
  j["exact"] = orc.energies[static_cast<std::size_t>(cfg.level)];
  emit(j, output_path(cfg, "gfmc.json"));
  return r.energy.reliable ? 0 : 3;
}

int cmd_pipeline(const Common& c) {
  const auto cfg = load(c);
  const auto r = run_pipeline(cfg);
  std::cout << r.summary.dump(2) << '\n';
  return r.reliable ? 0 : 3;
}

void print_rows(const std::vector<SweepRow>& rows, const std::string& setting) {
  std::cout << setting << "  energy  spread  stderr  reference  |E-ref|  exact\n";
  for (const auto& r : rows)
    std::cout << r.setting << "  " << r.energy << "  " << r.spread << "  " << r.stderr << "  " << r.reference << "  "
              << std::abs(r.energy - r.reference) << "  " << r.exact << '\n';
}

bool all_reliable(const std::vector<SweepRow>& rows) {
  for (const auto& r : rows)
    if (!r.reliable) return false;
  return true;
}

int cmd_sweep_shots(const Common& c) {
  const auto cfg = load(c);
  const auto rows = sweep_shots(cfg, output_path(cfg, "sweep_shots.csv").string());
  print_rows(rows, "shots");
  return all_reliable(rows) ? 0 : 3;
}

int cmd_sweep_trotter(const Common& c) {
  const auto cfg = load(c);
  const auto rows = sweep_trotter(cfg, output_path(cfg, "sweep_trotter.csv").string());
  print_rows(rows, "trotter_dt");
  return all_reliable(rows) ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shell-model Hamiltonians, shadow QSD trial states and fixed-node GFMC"};
  app.require_subcommand(1);

  Common c;
  std::string pauli_out, trajectory;
  int count = 0;

  auto* build = app.add_subcommand("build-ham", "build the sector and qubit Hamiltonians");
  add_common(build, c);
  build->add_option("--pauli-out", pauli_out, "write the qubit Hamiltonian as a Pauli-sum file");
  auto* exact = app.add_subcommand("exact", "lowest eigenvalues of the sector Hamiltonian");
  add_common(exact, c);
  exact->add_option("-k,--count", count, "number of eigenvalues (default: target level + 1)");
  auto* qsd = app.add_subcommand("qsd", "quantum subspace diagonalization trial states");
  add_common(qsd, c);
  auto* gfmc = app.add_subcommand("gfmc", "fixed-node GFMC with the classical trial state");
  add_common(gfmc, c);
  gfmc->add_option("--trajectory", trajectory, "write the walker trajectory as CSV");
  auto* pipeline = app.add_subcommand("pipeline", "full classical vs quantum-trial comparison");
  add_common(pipeline, c);
  auto* shots = app.add_subcommand("sweep-shots", "energy band against shadow shot count");
  add_common(shots, c);
  auto* trotter = app.add_subcommand("sweep-trotter", "energy against Trotter step");
  add_common(trotter, c);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (build->parsed()) return cmd_build_ham(c, pauli_out);
    if (exact->parsed()) return cmd_exact(c, count);
    if (qsd->parsed()) return cmd_qsd(c);
    if (gfmc->parsed()) return cmd_gfmc(c, trajectory);
    if (pipeline->parsed()) return cmd_pipeline(c);
    if (shots->parsed()) return cmd_sweep_shots(c);
    if (trotter->parsed()) return cmd_sweep_trotter(c);
  } catch (const std::exception& e) {
    std::cerr << "qegfmc: error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return 2;
}
