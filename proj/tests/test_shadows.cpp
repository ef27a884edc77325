#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "qegfmc/oracle.hpp"
#include "qegfmc/shadows.hpp"
#include "support.hpp"

using namespace qegfmc;
using qegfmc::testing::random_hamiltonian;
using qegfmc::testing::random_state;

namespace {

/// Exact <a|O|b> from dense matrices.
cplx exact_offdiagonal(const PauliOperator& o, const BranchStates& br) { return br.a.dot(o.to_dense() * br.b); }

}  // namespace

TEST(Shadows, ZeroDelayRealRoundsAlwaysGivePlusSign) {
  std::mt19937_64 g(3);
  const PauliOperator h = random_hamiltonian(2, 5, g);
  const VectorXc phi = random_state(2, g);
  const Propagator prop(h, EvolutionBackend::Exact);
  SplitMix64 rng(11);
  for (int r = 0; r < 300; ++r)
    EXPECT_EQ(shadow_round(phi, prop, 0.0, ShadowPart::Real, CliffordKind::LocalProduct, rng).sign, 1);
}

TEST(Shadows, MeanSignMatchesHadamardTestProbabilities) {
  std::mt19937_64 g(5);
  const PauliOperator h = random_hamiltonian(2, 6, g);
  const VectorXc phi = random_state(2, g);
  const Propagator prop(h, EvolutionBackend::Exact);
  const double tdiff = 0.8;
  const BranchStates br = fig1_branches(phi, prop, tdiff);
  const cplx overlap = br.a.dot(br.b);
  // p(+) - p(-) is Re<a|b> for the Real circuit and Im<a|b> for the Imag one.
  const std::array<double, 2> expected{overlap.real(), overlap.imag()};
  const int rounds = 6000;
  for (ShadowPart part : {ShadowPart::Real, ShadowPart::Imag}) {
    SplitMix64 rng(17 + static_cast<int>(part));
    double sum = 0.0;
    for (int r = 0; r < rounds; ++r) sum += shadow_round(phi, prop, tdiff, part, CliffordKind::Global, rng).sign;
    const double mean = sum / rounds;
    const double e = expected[static_cast<std::size_t>(part)];
    const double sigma = std::sqrt((1.0 - e * e) / rounds);
    EXPECT_NEAR(mean, e, 5.0 * sigma) << to_string(part);
  }
}

TEST(Shadows, SingleQubitInverseOfZeroOutcome) {
  for (CliffordKind kind : {CliffordKind::LocalProduct, CliffordKind::Global}) {
    Snapshot s;
    s.clifford = CliffordDescription::identity(1);
    s.clifford.kind = kind;
    s.outcome = 0;
    const MatrixXc m = inverse_channel(s);
    EXPECT_NEAR(std::abs(m(0, 0) - 2.0), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(m(1, 1) + 1.0), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(m(0, 1)), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(m.trace() - 1.0), 0.0, 1e-12);
  }
}

TEST(Shadows, InvertedSnapshotsHaveUnitTraceAndMatchPauliValues) {
  SplitMix64 rng(23);
  for (CliffordKind kind : {CliffordKind::LocalProduct, CliffordKind::Global}) {
    for (int trial = 0; trial < 20; ++trial) {
      Snapshot s;
      s.clifford = sample_clifford(kind, 3, rng);
      s.outcome = rng.below(8);
      const MatrixXc m = inverse_channel(s);
      EXPECT_NEAR(std::abs(m.trace() - 1.0), 0.0, 1e-10);
      for (const char* letters : {"XYZ", "ZIZ", "IYI", "XXX", "III"}) {
        const PauliString p = PauliString::from_letters(letters);
        const cplx dense = (PauliOperator(p, 1.0).to_dense() * m).trace();
        EXPECT_NEAR(std::abs(dense - snapshot_pauli_value(s, p)), 0.0, 1e-9) << letters;
      }
    }
  }
}

TEST(Shadows, LocalChannelInvertsExactlyOnTwoQubits) {
  std::mt19937_64 g(29);
  const VectorXc psi = random_state(2, g);
  const MatrixXc rho = psi * psi.adjoint();
  MatrixXc avg = MatrixXc::Zero(4, 4);
  const int k = kLocalCliffordCount;
  for (int c0 = 0; c0 < k; ++c0)
    for (int c1 = 0; c1 < k; ++c1) {
      Snapshot s;
      s.clifford = {CliffordKind::LocalProduct, 2, {static_cast<std::uint8_t>(c0), static_cast<std::uint8_t>(c1)}, {}};
      StateVector v(2, psi);
      apply_clifford(s.clifford, v);
      for (Bits o = 0; o < 4; ++o) {
        s.outcome = o;
        avg += std::norm(v[o]) * inverse_channel(s);
      }
    }
  avg /= static_cast<double>(k * k);
  EXPECT_LT((avg - rho).norm(), 1e-12);
}

TEST(Shadows, GlobalChannelInvertsOnAverage) {
  std::mt19937_64 g(31);
  const VectorXc psi = random_state(2, g);
  const MatrixXc rho = psi * psi.adjoint();
  MatrixXc avg = MatrixXc::Zero(4, 4);
  SplitMix64 rng(37);
  const int samples = 20000;
  for (int r = 0; r < samples; ++r) {
    Snapshot s;
    s.clifford = sample_global_clifford(2, rng);
    StateVector v(2, psi);
    apply_clifford(s.clifford, v);
    for (Bits o = 0; o < 4; ++o) {
      s.outcome = o;
      avg += std::norm(v[o]) * inverse_channel(s);
    }
  }
  avg /= static_cast<double>(samples);
  EXPECT_LT((avg - rho).norm(), 0.05);
}

TEST(Shadows, OffDiagonalEstimateWithinFiveSigma) {
  std::mt19937_64 g(41);
  const PauliOperator h = random_hamiltonian(3, 8, g);
  const VectorXc phi = random_state(3, g);
  const Propagator prop(h, EvolutionBackend::Exact);
  const BranchStates br = fig1_branches(phi, prop, 0.7);
  const VectorXc ref = oracle::exact_evolution(h, phi, -0.7);
  const cplx exact = phi.dot(h.to_dense() * ref);
  EXPECT_NEAR(std::abs(exact - exact_offdiagonal(h, br)), 0.0, 1e-10);
  for (CliffordKind kind : {CliffordKind::LocalProduct, CliffordKind::Global}) {
    ShadowSettings cfg;
    cfg.shots = 10000;
    cfg.ensemble = kind;
    cfg.seed = 43;
    const ShadowEstimate est = run_shadow(br, 0, 1, cfg);
    const ComplexEstimate e = estimate_offdiagonal(est, h);
    EXPECT_NEAR(e.value.real(), exact.real(), 5.0 * e.stderr_real) << to_string(kind);
    EXPECT_NEAR(e.value.imag(), exact.imag(), 5.0 * e.stderr_imag) << to_string(kind);
    EXPECT_LT(std::norm(e.value - exact), 25.0 * variance_bound(h, cfg.shots, kind));
  }
}

TEST(Shadows, LiteralCircuitAgreesWithExact) {
  std::mt19937_64 g(47);
  const PauliOperator h = random_hamiltonian(3, 6, g);
  const VectorXc phi = random_state(3, g);
  const Propagator prop(h, EvolutionBackend::Exact);
  const double tdiff = -0.4;
  const cplx exact = exact_offdiagonal(h, fig1_branches(phi, prop, tdiff));
  ShadowEstimate est(0, 1, 3, CliffordKind::LocalProduct);
  SplitMix64 rng(53);
  for (int r = 0; r < 4000; ++r)
    for (ShadowPart part : {ShadowPart::Real, ShadowPart::Imag})
      est.add(shadow_round(phi, prop, tdiff, part, CliffordKind::LocalProduct, rng));
  const ComplexEstimate e = estimate_offdiagonal(est, h);
  EXPECT_NEAR(e.value.real(), exact.real(), 5.0 * e.stderr_real);
  EXPECT_NEAR(e.value.imag(), exact.imag(), 5.0 * e.stderr_imag);
}

TEST(Shadows, OverlapFromIdentityObservable) {
  std::mt19937_64 g(59);
  const VectorXc a = random_state(2, g), b = random_state(2, g);
  ShadowSettings cfg;
  cfg.shots = 20000;
  cfg.seed = 61;
  const ComplexEstimate e = estimate_offdiagonal(run_shadow({a, b}, 2, 3, cfg), PauliOperator::identity(2));
  const cplx exact = a.dot(b);
  EXPECT_NEAR(e.value.real(), exact.real(), 5.0 * e.stderr_real);
  EXPECT_NEAR(e.value.imag(), exact.imag(), 5.0 * e.stderr_imag);
}

TEST(Shadows, MeanSquaredErrorBoundedAndScalesInversely) {
  std::mt19937_64 g(67);
  const PauliOperator h = random_hamiltonian(3, 5, g);
  const VectorXc phi = random_state(3, g);
  const Propagator prop(h, EvolutionBackend::Exact);
  const BranchStates br = fig1_branches(phi, prop, 0.5);
  const cplx exact = exact_offdiagonal(h, br);
  std::vector<double> logn, logmse;
  for (long shots : {100L, 1000L, 10000L}) {
    double mse = 0.0;
    const int trials = 100;
    for (int t = 0; t < trials; ++t) {
      ShadowSettings cfg;
      cfg.shots = shots;
      cfg.seed = 1000 + static_cast<std::uint64_t>(t);
      mse += std::norm(estimate_offdiagonal(run_shadow(br, 0, 1, cfg), h).value - exact);
    }
    mse /= trials;
    EXPECT_LE(mse, variance_bound(h, shots)) << shots;
    logn.push_back(std::log(static_cast<double>(shots)));
    logmse.push_back(std::log(mse));
  }
  EXPECT_NEAR(qegfmc::testing::slope(logn, logmse), -1.0, 0.15);
}

TEST(Shadows, EmpiricalVarianceBelowBoundForRandomHamiltonians) {
  std::mt19937_64 g(101);
  for (int k = 0; k < 3; ++k) {
    const PauliOperator h = random_hamiltonian(3, 6, g);
    const VectorXc phi = random_state(3, g);
    const Propagator prop(h, EvolutionBackend::Exact);
    const BranchStates br = fig1_branches(phi, prop, 0.6);
    std::vector<cplx> values;
    for (int t = 0; t < 200; ++t) {
      ShadowSettings cfg;
      cfg.shots = 100;
      cfg.seed = 5000 + static_cast<std::uint64_t>(200 * k + t);
      values.push_back(estimate_offdiagonal(run_shadow(br, 0, 1, cfg), h).value);
    }
    cplx mean = 0.0;
    for (const auto& v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (const auto& v : values) var += std::norm(v - mean);
    var /= static_cast<double>(values.size() - 1);
    EXPECT_LE(var, variance_bound(h, 100)) << k;
  }
}

TEST(Shadows, DiagonalOverlapAndHermitianPairing) {
  std::mt19937_64 g(103);
  const PauliOperator h = random_hamiltonian(2, 5, g);
  const VectorXc phi = random_state(2, g);
  const Propagator prop(h, EvolutionBackend::Exact);
  ShadowSettings cfg;
  cfg.shots = 20000;
  cfg.seed = 107;
  const ComplexEstimate sii = estimate_offdiagonal(run_shadow(fig1_branches(phi, prop, 0.0), 1, 1, cfg),
                                                   PauliOperator::identity(2));
  EXPECT_DOUBLE_EQ(sii.value.real(), 1.0);
  EXPECT_NEAR(sii.value.imag(), 0.0, 5.0 * sii.stderr_imag + 1e-12);
  // Swapping the branches estimates the conjugate element.
  const BranchStates br = fig1_branches(phi, prop, 0.9);
  const ComplexEstimate hij = estimate_offdiagonal(run_shadow(br, 0, 1, cfg), h);
  const ComplexEstimate hji = estimate_offdiagonal(run_shadow({br.b, br.a}, 1, 0, cfg), h);
  EXPECT_NEAR(hij.value.real(), hji.value.real(), 5.0 * std::hypot(hij.stderr_real, hji.stderr_real));
  EXPECT_NEAR(hij.value.imag(), -hji.value.imag(), 5.0 * std::hypot(hij.stderr_imag, hji.stderr_imag));
}

TEST(Shadows, ShadowNormBounds) {
  EXPECT_DOUBLE_EQ(shadow_norm_bound(PauliOperator(PauliString::from_letters("ZI"), 1.0), CliffordKind::LocalProduct), 3.0);
  EXPECT_DOUBLE_EQ(shadow_norm_bound(PauliOperator::identity(2, 2.0), CliffordKind::LocalProduct), 4.0);
  PauliOperator o(2);
  o.add(PauliString::from_letters("XX"), 0.5);
  o.add(PauliString::identity(2), 1.0);
  EXPECT_DOUBLE_EQ(shadow_norm_bound(o, CliffordKind::LocalProduct), 6.25);
  const double global = std::sqrt(3.0 * 0.25 * 4.0) + 1.0;
  EXPECT_NEAR(shadow_norm_bound(o, CliffordKind::Global), global * global, 1e-12);
  EXPECT_NEAR(variance_bound(o, 100), 2.0 * 6.25 / 100.0, 1e-15);
}

TEST(Shadows, RunsAreReproducibleAndKeyedByPair) {
  std::mt19937_64 g(71);
  const BranchStates br{random_state(2, g), random_state(2, g)};
  ShadowSettings cfg;
  cfg.shots = 500;
  cfg.seed = 73;
  const PauliOperator zz(PauliString::from_letters("ZZ"), 1.0);
  const cplx v1 = estimate_offdiagonal(run_shadow(br, 0, 1, cfg), zz).value;
  const cplx v2 = estimate_offdiagonal(run_shadow(br, 0, 1, cfg), zz).value;
  const cplx v3 = estimate_offdiagonal(run_shadow(br, 0, 2, cfg), zz).value;
  EXPECT_EQ(v1, v2);
  EXPECT_NE(v1, v3);
}

TEST(Shadows, ShadowOperatorMatchesDenseSnapshots) {
  for (int n : {3, 9}) {
    for (CliffordKind kind : {CliffordKind::LocalProduct, CliffordKind::Global}) {
      if (n == 9 && kind == CliffordKind::Global) continue;
      std::mt19937_64 g(79 + static_cast<unsigned>(n));
      const BranchStates br{random_state(n, g), random_state(n, g)};
      ShadowSettings cfg;
      cfg.shots = n == 3 ? 300 : 40;
      cfg.ensemble = kind;
      cfg.keep_snapshots = true;
      cfg.seed = 83;
      const ShadowEstimate est = run_shadow(br, 0, 1, cfg);
      ShadowOperator op(n);
      op.add(est, ShadowPart::Real, 0.7);
      op.add(est, ShadowPart::Imag, -0.3);
      const Eigen::Index d = Eigen::Index{1} << n;
      MatrixXc dense = MatrixXc::Zero(d, d);
      for (const auto& s : est.snapshots)
        dense += (s.part == ShadowPart::Real ? 0.7 : -0.3) * s.sign / static_cast<double>(cfg.shots) * inverse_channel(s);
      const VectorXc v = random_state(n, g);
      EXPECT_LT((op.apply(v) - dense * v).norm(), 1e-9 * std::max(1.0, (dense * v).norm())) << n;

      // Tally-based and per-snapshot estimates agree.
      const PauliOperator obs = random_hamiltonian(n, 6, g);
      cplx direct_r = 0.0, direct_i = 0.0;
      for (const auto& s : est.snapshots)
        (s.part == ShadowPart::Real ? direct_r : direct_i) += static_cast<double>(s.sign) * snapshot_value(s, obs);
      const cplx direct = (direct_r + kI * direct_i) / static_cast<double>(cfg.shots);
      EXPECT_NEAR(std::abs(estimate_offdiagonal(est, obs).value - direct), 0.0, 1e-9);
    }
  }
}

TEST(Shadows, ArchiveRoundTrip) {
  std::mt19937_64 g(89);
  const BranchStates br{random_state(3, g), random_state(3, g)};
  const auto path = (std::filesystem::temp_directory_path() / "qegfmc_archive_test.jsonl").string();
  const PauliOperator obs = random_hamiltonian(3, 5, g);
  for (CliffordKind kind : {CliffordKind::LocalProduct, CliffordKind::Global}) {
    ShadowEstimate original;
    {
      SnapshotArchive archive(path);
      ShadowSettings cfg;
      cfg.shots = 200;
      cfg.ensemble = kind;
      cfg.seed = 97;
      cfg.sink = archive.sink();
      original = run_shadow(br, 1, 2, cfg);
    }
    const auto records = read_snapshot_archive(path);
    ASSERT_EQ(records.size(), 400u);
    ShadowEstimate rebuilt(1, 2, 3, kind);
    for (const auto& r : records) {
      EXPECT_EQ(r.i, 1);
      EXPECT_EQ(r.j, 2);
      rebuilt.add(r.snapshot);
    }
    EXPECT_NEAR(std::abs(estimate_offdiagonal(rebuilt, obs).value - estimate_offdiagonal(original, obs).value), 0.0,
                1e-12);
  }
  std::remove(path.c_str());
}

TEST(Shadows, MalformedArchiveReportsLine) {
  const auto path = (std::filesystem::temp_directory_path() / "qegfmc_bad_archive.jsonl").string();
  {
    std::ofstream out(path);
    out << R"({"pair":[0,1],"part":"R","sign":1,"clifford":{"kind":"local","local":[0]},"outcome":"0"})" << '\n';
    out << "{not json\n";
  }
  try {
    read_snapshot_archive(path);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2);
  }
  std::remove(path.c_str());
}
