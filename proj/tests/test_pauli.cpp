#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "qegfmc/fermion_map.hpp"
#include "qegfmc/shell_model.hpp"

using namespace qegfmc;

namespace {

const std::string kSdFile = std::string(QEGFMC_DATA_DIR) + "/sd_toy.int";

// Kronecker-product construction of a Pauli string, independent of the mask
// arithmetic used by the library.
MatrixXc kron_letters(const std::string& letters) {
  MatrixXc I = MatrixXc::Identity(2, 2), X(2, 2), Y(2, 2), Z(2, 2);
  X << 0, 1, 1, 0;
  Y << 0, cplx(0, -1), cplx(0, 1), 0;
  Z << 1, 0, 0, -1;
  MatrixXc m = MatrixXc::Identity(1, 1);
  for (char c : letters) {
    const MatrixXc& f = c == 'X' ? X : c == 'Y' ? Y : c == 'Z' ? Z : I;
    MatrixXc k(m.rows() * 2, m.cols() * 2);
    for (int r = 0; r < m.rows(); ++r)
      for (int s = 0; s < m.cols(); ++s) k.block(2 * r, 2 * s, 2, 2) = m(r, s) * f;
    m = k;
  }
  return m;
}

std::string random_letters(int n, std::mt19937_64& rng) {
  std::string s;
  for (int q = 0; q < n; ++q) s += "IXYZ"[rng() % 4];
  return s;
}

PauliOperator random_operator(int n, int terms, std::mt19937_64& rng, bool hermitian) {
  std::normal_distribution<double> g;
  PauliOperator op(n);
  for (int k = 0; k < terms; ++k)
    op.add(PauliString::from_letters(random_letters(n, rng)), hermitian ? cplx(g(rng), 0) : cplx(g(rng), g(rng)));
  return op;
}

std::vector<double> real_spectrum(const MatrixXc& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXc> es(m);
  std::vector<double> v(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  return v;
}

PauliOperator qubit_hamiltonian(const SecondQuantizedHamiltonian& h, MappingScheme s) {
  return map_fermion_operator(h.n_modes, h.monomials(), s);
}

}  // namespace

TEST(PauliString, LettersRoundTrip) {
  const auto p = PauliString::from_letters("XYZI");
  EXPECT_EQ(p.letters(), "XYZI");
  EXPECT_EQ(p.weight(), 3);
  EXPECT_EQ(p.y_count(), 1);
  EXPECT_THROW(PauliString::from_letters("XQ"), ParseError);
}

TEST(PauliString, DenseMatchesKroneckerProduct) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 50; ++t) {
    const std::string s = random_letters(3, rng);
    const MatrixXc dense = PauliOperator(PauliString::from_letters(s), 1.0).to_dense();
    EXPECT_LT((dense - kron_letters(s)).norm(), 1e-14) << s;
  }
}

TEST(PauliString, ProductsMatchMatrixProducts) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 200; ++t) {
    const std::string a = random_letters(3, rng), b = random_letters(3, rng);
    const auto [phase, c] = multiply(PauliString::from_letters(a), PauliString::from_letters(b));
    EXPECT_LT((phase * kron_letters(c.letters()) - kron_letters(a) * kron_letters(b)).norm(), 1e-14);
    const bool commute = (kron_letters(a) * kron_letters(b) - kron_letters(b) * kron_letters(a)).norm() < 1e-12;
    EXPECT_EQ(PauliString::from_letters(a).commutes_with(PauliString::from_letters(b)), commute);
  }
}

TEST(PauliOperator, PrunesAndCombines) {
  PauliOperator op(2);
  op.add(PauliString::from_letters("XX"), 0.5);
  op.add(PauliString::from_letters("XX"), -0.5 + 1e-13);
  EXPECT_TRUE(op.empty());
  op.add(PauliString::from_letters("ZI"), 2.0);
  const auto sq = op * op;
  EXPECT_EQ(sq.size(), 1u);
  EXPECT_NEAR(std::abs(sq.trace_part() - cplx(4.0)), 0.0, 1e-15);
}

TEST(PauliOperator, TextRoundTrip) {
  std::mt19937_64 rng(3);
  const auto op = random_operator(4, 12, rng, false);
  std::istringstream in(op.to_string());
  const auto back = PauliOperator::read(in);
  EXPECT_EQ(back.size(), op.size());
  EXPECT_LT((back.to_dense() - op.to_dense()).norm(), 1e-13);
  std::istringstream simple("0.5+0.0i XXIZ\n-1.5e-3-2i YIII\n3 IIII\n");
  const auto s = PauliOperator::read(simple);
  EXPECT_EQ(s.coefficient(PauliString::from_letters("XXIZ")), cplx(0.5, 0.0));
  EXPECT_EQ(s.coefficient(PauliString::from_letters("YIII")), cplx(-1.5e-3, -2.0));
  EXPECT_EQ(s.trace_part(), cplx(3.0, 0.0));
}

TEST(PauliApply, Basics) {
  VectorXc v = VectorXc::Random(8);
  EXPECT_LT((pauli_apply(PauliOperator::identity(3), v) - v).norm(), 1e-15);
  const PauliOperator z(PauliString::from_letters("Z"), 1.0);
  VectorXc zero(2), one(2);
  zero << 1, 0;
  one << 0, 1;
  EXPECT_LT((pauli_apply(z, zero) - zero).norm(), 1e-15);
  EXPECT_LT((pauli_apply(z, one) + one).norm(), 1e-15);
  EXPECT_THROW(pauli_apply(z, v), DimensionError);
}

TEST(PauliApply, MatchesDenseMultiplication) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 20; ++t) {
    const auto op = random_operator(3, 10, rng, false);
    const VectorXc v = VectorXc::Random(8);
    MatrixXc dense = MatrixXc::Zero(8, 8);
    for (const auto& [p, c] : op.terms()) dense += c * kron_letters(p.letters());
    EXPECT_LT((pauli_apply(op, v) - dense * v).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(FermionMap, NumberOperatorAndHopping) {
  const auto n0 = map_fermion_operator(1, {{{create(0), annihilate(0)}, 1.0}});
  EXPECT_EQ(n0.size(), 2u);
  EXPECT_NEAR(std::abs(n0.coefficient(PauliString::from_letters("I")) - 0.5), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(n0.coefficient(PauliString::from_letters("Z")) + 0.5), 0.0, 1e-15);

  const auto hop = map_fermion_operator(2, {{{create(0), annihilate(1)}, 1.0}, {{create(1), annihilate(0)}, 1.0}});
  EXPECT_EQ(hop.size(), 2u);
  EXPECT_NEAR(std::abs(hop.coefficient(PauliString::from_letters("XX")) - 0.5), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(hop.coefficient(PauliString::from_letters("YY")) - 0.5), 0.0, 1e-15);
  EXPECT_THROW(map_fermion_operator(2, {{{create(2)}, 1.0}}), DimensionError);
}

TEST(FermionMap, CanonicalAnticommutation) {
  for (auto scheme : {MappingScheme::JordanWigner, MappingScheme::BravyiKitaev})
    for (int n = 1; n <= 6; ++n) {
      const FermionEncoding enc(n, scheme);
      const int dim = 1 << n;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const MatrixXc a = enc.ladder(annihilate(i)).to_dense();
          const MatrixXc cd = enc.ladder(create(j)).to_dense();
          const MatrixXc ci = enc.ladder(create(i)).to_dense();
          MatrixXc expect = MatrixXc::Zero(dim, dim);
          if (i == j) expect.setIdentity();
          EXPECT_LT((a * cd + cd * a - expect).norm(), 1e-12) << n << " " << i << " " << j;
          EXPECT_LT((ci * cd + cd * ci).norm(), 1e-12);
          EXPECT_LT((ci - a.adjoint()).norm(), 1e-12);
        }
    }
}

TEST(FermionMap, EncodingActsLikeOccupationBasis) {
  // The mapped ladder operators act on encode(x) exactly as apply_ladder acts on x.
  for (auto scheme : {MappingScheme::JordanWigner, MappingScheme::BravyiKitaev}) {
    const int n = 5;
    const FermionEncoding enc(n, scheme);
    for (Bits x = 0; x < (Bits{1} << n); ++x) {
      EXPECT_EQ(enc.decode(enc.encode(x)), x);
      for (int j = 0; j < n; ++j)
        for (bool c : {true, false}) {
          Bits y = x;
          const double s = apply_ladder(y, n, {j, c});
          VectorXc v = VectorXc::Zero(1 << n);
          v(static_cast<Eigen::Index>(enc.encode(x))) = 1.0;
          const VectorXc w = pauli_apply(enc.ladder({j, c}), v);
          if (s == 0.0) {
            EXPECT_LT(w.norm(), 1e-14);
          } else {
            EXPECT_NEAR(std::abs(w(static_cast<Eigen::Index>(enc.encode(y))) - s), 0.0, 1e-14);
          }
        }
    }
  }
}

TEST(FermionMap, ShellHamiltonianSpectraAgreeAcrossSchemes) {
  const auto data = restrict_orbitals(parse_interaction_file(kSdFile), {"0d5/2", "1s1/2"});
  const auto modes = single_particle_states(data, Species::Neutron);
  ASSERT_EQ(modes.size(), 8u);
  const auto h = second_quantize(data, modes);
  const auto jw = qubit_hamiltonian(h, MappingScheme::JordanWigner);
  const auto bk = qubit_hamiltonian(h, MappingScheme::BravyiKitaev);
  EXPECT_TRUE(jw.is_hermitian());
  EXPECT_TRUE(bk.is_hermitian());
  const auto ej = real_spectrum(jw.to_dense()), eb = real_spectrum(bk.to_dense());
  for (std::size_t k = 0; k < ej.size(); ++k) EXPECT_NEAR(ej[k], eb[k], 1e-10);
}

TEST(FermionMap, SpectrumMatchesSparseBlocks) {
  const auto data = restrict_orbitals(parse_interaction_file(kSdFile), {"1s1/2", "0d3/2"});
  const auto modes = single_particle_states(data, Species::Neutron);
  const int n = static_cast<int>(modes.size());
  const auto h = second_quantize(data, modes);
  for (auto scheme : {MappingScheme::JordanWigner, MappingScheme::BravyiKitaev}) {
    const FermionEncoding enc(n, scheme);
    const MatrixXc dense = qubit_hamiltonian(h, scheme).to_dense();
    for (int N = 0; N <= n; ++N) {
      const auto basis = enumerate_basis(modes, {.particles = N});
      const auto sparse = build_hamiltonian(h, basis);
      MatrixXc block(basis.size(), basis.size());
      for (int r = 0; r < basis.size(); ++r)
        for (int c = 0; c < basis.size(); ++c)
          block(r, c) = dense(static_cast<Eigen::Index>(enc.encode(basis.state(r))),
                              static_cast<Eigen::Index>(enc.encode(basis.state(c))));
      EXPECT_LT((block - sparse.to_dense().cast<cplx>()).norm(), 1e-10);
      const auto a = real_spectrum(block), b = real_spectrum(sparse.to_dense().cast<cplx>());
      for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k], b[k], 1e-9);
    }
  }
}
