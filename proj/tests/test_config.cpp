#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qegfmc/config.hpp"
#include "qegfmc/pipeline.hpp"

using namespace qegfmc;
namespace fs = std::filesystem;

namespace {

ConfigFile parse_text(const std::string& text) {
  std::istringstream in(text);
  return ConfigFile::parse(in);
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Fresh scratch directory under the system temp dir.
fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("qegfmc_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

/// One particle hopping on three modes with negative amplitudes: no sign
/// problem, sector dimension 3.
const char* kSignFreePauli =
    "# single particle, three sites\n"
    "-0.5 ZII\n"
    "0.0 IZI\n"
    "0.5 IIZ\n"
    "-0.4 XXI\n"
    "-0.4 YYI\n"
    "-0.3 IXX\n"
    "-0.3 IYY\n";

RunConfig sign_free_config(const fs::path& dir) {
  write_file(dir / "chain.pauli", kSignFreePauli);
  write_file(dir / "run.conf", "problem.kind = pauli\n"
                               "pauli.file = chain.pauli\n"
                               "sector.particles = 1\n"
                               "target.level = 0\n"
                               "subspace.dim = 3\n"
                               "subspace.dt = 0.7\n"
                               "qsd.mode = exact\n"
                               "gfmc.walkers = 100\n"
                               "gfmc.steps = 1100\n"
                               "gfmc.equilibration = 100\n"
                               "gfmc.seed = 4\n"
                               "workers = 1\n"
                               "output.dir = " +
                                   (dir / "out").string() + "\n");
  return load_run_config_file((dir / "run.conf").string());
}

}  // namespace

TEST(ConfigFile, ParsesKeysCommentsAndLists) {
  const auto c = parse_text("# header\n  a.b = 3  # trailing\n\nlist = 1, 2 ,3\nflag = yes\nbig = 1e5\n");
  EXPECT_EQ(c.get("a.b", ""), "3");
  EXPECT_EQ(c.get_number<int>("a.b", 0), 3);
  EXPECT_EQ(c.get_number_list<double>("list", {}), (std::vector<double>{1, 2, 3}));
  EXPECT_TRUE(c.get_bool("flag", false));
  EXPECT_EQ(c.get_number<long>("big", 0), 100000);
  EXPECT_EQ(c.get_number<int>("missing", 7), 7);
  EXPECT_TRUE(c.unused_keys().empty());
}

TEST(ConfigFile, ReportsLineNumbers) {
  try {
    parse_text("a = 1\n\nnot a pair\n");
    FAIL() << "no exception";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3);
  }
  try {
    parse_text("a = 1\na = 2\n");
    FAIL() << "no exception";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2);
  }
  EXPECT_THROW(parse_text(" = 4\n"), ParseError);
}

TEST(ConfigFile, RejectsBadValues) {
  const auto c = parse_text("n = 2.5\nb = maybe\nl = 1,,2\nx = 3abc\n");
  EXPECT_THROW(c.get_number<int>("n", 0), ConfigError);
  EXPECT_THROW(c.get_bool("b", false), ConfigError);
  EXPECT_THROW(c.get_list("l"), ConfigError);
  EXPECT_THROW(c.get_number<double>("x", 0.0), ConfigError);
  EXPECT_THROW(c.require("absent"), ConfigError);
}

TEST(ConfigFile, OverridesAndUnusedKeys) {
  auto c = parse_text("a = 1\nb = 2\n");
  c.set("a=5");
  c.set("c = 7");
  EXPECT_EQ(c.get_number<int>("a", 0), 5);
  EXPECT_EQ(c.unused_keys(), (std::vector<std::string>{"b", "c"}));
  EXPECT_THROW(c.set("no-equals"), ConfigError);
}

TEST(RunConfig, RejectsUnknownKeysAndBadSettings) {
  const auto dir = scratch("unknown");
  write_file(dir / "chain.pauli", kSignFreePauli);
  write_file(dir / "a.conf", "problem.kind = pauli\npauli.file = chain.pauli\ngfmc.walker = 10\n");
  EXPECT_THROW(load_run_config_file((dir / "a.conf").string()), ConfigError);
  write_file(dir / "b.conf", "problem.kind = pauli\npauli.file = chain.pauli\n");
  EXPECT_THROW(load_run_config_file((dir / "b.conf").string(), {"gfmc.gamma=1.5"}), ConfigError);
  EXPECT_THROW(load_run_config_file((dir / "b.conf").string(), {"subspace.dt=0.1,-1"}), ConfigError);
  EXPECT_THROW(load_run_config_file((dir / "b.conf").string(), {"qsd.mode=fuzzy"}), ConfigError);
  EXPECT_THROW(load_run_config_file((dir / "b.conf").string(), {"problem.kind=lattice"}), ConfigError);
}

TEST(RunConfig, ResolvesPathsAgainstConfigDirectory) {
  const auto dir = scratch("paths");
  const auto cfg = sign_free_config(dir);
  EXPECT_EQ(fs::path(cfg.pauli_file), dir / "chain.pauli");
  EXPECT_EQ(cfg.gfmc.n_walkers, 100);
  EXPECT_EQ(cfg.gfmc.samples(), 100 * 1000);
  EXPECT_EQ(cfg.level, 0);
}

TEST(RunConfig, AutomaticKrylovStep) {
  const auto dir = scratch("auto_dt");
  const auto cfg = sign_free_config(dir);
  RunConfig a = cfg;
  a.subspace_dts.clear();
  const auto p = build_problem(a);
  const auto dts = subspace_time_steps(a, p);
  ASSERT_EQ(dts.size(), 1u);
  EXPECT_DOUBLE_EQ(dts[0], full_circle_time_step(p.sector_h.gershgorin_width(), a.subspace_dim));
  EXPECT_EQ(subspace_time_steps(cfg, p), std::vector<double>{0.7});
}

TEST(PauliProblem, SectorAndHartreeFock) {
  const auto dir = scratch("pauli_problem");
  const auto cfg = sign_free_config(dir);
  const auto p = build_problem(cfg);
  EXPECT_EQ(p.n_qubits(), 3);
  ASSERT_EQ(p.dim(), 3);
  EXPECT_EQ(p.sector_h.asymmetry(), 0.0);
  EXPECT_EQ(std::popcount(p.configs[static_cast<std::size_t>(p.hf)]), 1);
  for (int k = 0; k < p.dim(); ++k) EXPECT_LE(p.sector_h.diagonal(p.hf), p.sector_h.diagonal(k));
  // Every off-diagonal element is a hopping amplitude.
  const Eigen::MatrixXd m = p.sector_h.to_dense();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i != j) EXPECT_LE(m(i, j), 0.0);
  const auto exact = oracle::exact_spectrum(p.qubit_h, 8);
  const auto sector = oracle::exact_spectrum(p.sector_h, 1);
  bool found = false;
  for (double e : exact.eigenvalues) found = found || std::abs(e - sector.eigenvalues[0]) < 1e-10;
  EXPECT_TRUE(found);
}

TEST(PauliProblem, FileErrors) {
  const auto dir = scratch("pauli_errors");
  write_file(dir / "a.pauli", "1.0 XZ\n0.5 XZY\n");
  EXPECT_THROW(parse_pauli_file((dir / "a.pauli").string()), ParseError);
  write_file(dir / "b.pauli", "1.0\n");
  EXPECT_THROW(parse_pauli_file((dir / "b.pauli").string()), ParseError);
  write_file(dir / "c.pauli", "# nothing\n");
  EXPECT_THROW(parse_pauli_file((dir / "c.pauli").string()), ConfigError);
  write_file(dir / "d.pauli", "1.0 XQ\n");
  EXPECT_THROW(parse_pauli_file((dir / "d.pauli").string()), ParseError);
  EXPECT_THROW(parse_pauli_file((dir / "none.pauli").string()), ConfigError);
  // Y alone is imaginary in the computational basis.
  write_file(dir / "e.pauli", "1.0 Y\n");
  BasisConstraints any;
  EXPECT_THROW(problem_from_pauli(parse_pauli_file((dir / "e.pauli").string()), any, "e"), ConfigError);
}

TEST(Stages, ExitCodes) {
  EXPECT_EQ(exit_code_for(ConfigError("x")), 2);
  EXPECT_EQ(exit_code_for(NumericalError("x")), 3);
  EXPECT_EQ(exit_code_for(std::runtime_error("x")), 1);
  try {
    run_stage("qsd", [] { return run_stage("inner", []() -> int { throw NumericalError("bad"); }); });
    FAIL() << "no exception";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "inner");
    EXPECT_EQ(e.exit_code(), 3);
  }
}

TEST(Pipeline, MissingInteractionFileIsAStageError) {
  const auto dir = scratch("missing");
  write_file(dir / "run.conf", "interaction.file = nowhere.int\nsector.particles = 2\noutput.dir = " +
                                   (dir / "out").string() + "\n");
  const auto cfg = load_run_config_file((dir / "run.conf").string());
  try {
    run_pipeline(cfg);
    FAIL() << "no exception";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "build-ham");
    EXPECT_EQ(e.exit_code(), 2);
  }
  const auto summary = nlohmann::json::parse(read_text(dir / "out" / "summary.json"));
  EXPECT_EQ(summary["error"]["stage"], "build-ham");
  EXPECT_TRUE(summary["stages_completed"].empty());
}

TEST(Pipeline, SignFreeGroundStateWithinErrorBars) {
  const auto dir = scratch("sign_free");
  const auto cfg = sign_free_config(dir);
  const auto r = run_pipeline(cfg);
  ASSERT_EQ(r.runs.size(), 2u);
  const double exact = r.oracle.energies[0];
  for (const auto& run : r.runs) {
    const auto& e = run.result.energy;
    EXPECT_TRUE(e.reliable) << run.label;
    EXPECT_EQ(e.n_samples, 100000);
    EXPECT_LE(std::abs(e.value - exact), 3.0 * e.stderr + 1e-12) << run.label;
  }
  EXPECT_TRUE(r.reliable);
  EXPECT_EQ(r.summary["stages_completed"].size(), 4u);
  EXPECT_TRUE(fs::exists(dir / "out" / "summary.json"));
  const std::string csv = read_text(dir / "out" / "energy_vs_step.csv");
  EXPECT_EQ(csv.rfind("# qegfmc energy-vs-step v1\n", 0), 0u);
}

TEST(Pipeline, OutputIsDeterministic) {
  const auto dir = scratch("determinism");
  auto cfg = sign_free_config(dir);
  cfg.gfmc.n_steps = 300;
  run_pipeline(cfg);
  const std::string first = read_text(dir / "out" / "energy_vs_step.csv");
  run_pipeline(cfg);
  EXPECT_EQ(read_text(dir / "out" / "energy_vs_step.csv"), first);
}

TEST(Pipeline, QuantumTrialEqualsClassicalForOneDimensionalSubspace) {
  // A one-vector Krylov space at level 0 is the Hartree-Fock state itself,
  // so with a shared walker seed both runs see identical trajectories.
  const auto dir = scratch("dim1");
  RunConfig c = sign_free_config(dir);
  c.subspace_dim = 1;
  c.gfmc.n_steps = 300;
  const auto r = run_pipeline(c);
  ASSERT_EQ(r.runs.size(), 2u);
  EXPECT_NEAR(r.runs[0].result.energy.value, r.runs[1].result.energy.value, 1e-10);
}

TEST(Sweeps, SingleRowShotsAndTrotter) {
  const auto dir = scratch("sweeps");
  auto cfg = sign_free_config(dir);
  cfg.shots = {2000};
  cfg.repeats = 2;
  cfg.gfmc.n_steps = 200;
  cfg.gfmc.equilibration_steps = 20;
  const auto csv = (dir / "shots.csv").string();
  const auto rows = sweep_shots(cfg, csv);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].setting, 2000.0);
  EXPECT_EQ(rows[0].repeats, 2);
  EXPECT_LE(rows[0].band_low(), rows[0].band_high());
  const std::string text = read_text(csv);
  EXPECT_EQ(text.rfind("# qegfmc sweep-shots v1\n", 0), 0u);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);

  cfg.qsd_mode = QsdModeKind::Exact;
  cfg.sweep_trotter_dts = {0.1};
  const auto trows = sweep_trotter(cfg);
  ASSERT_EQ(trows.size(), 1u);
  EXPECT_EQ(trows[0].setting, 0.1);
  // At level 0 the trial does not affect the sign-free estimate beyond noise.
  EXPECT_LE(std::abs(trows[0].energy - trows[0].reference), 0.05);
}
