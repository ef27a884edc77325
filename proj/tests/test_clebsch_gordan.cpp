#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <tuple>

#include <Eigen/Dense>

#include "qegfmc/clebsch_gordan.hpp"

using qegfmc::clebsch_gordan;

namespace {

// Independent construction of coupled states from the ladder-operator algebra.
// Product states |m1 m2> are indexed by (m1, m2); all quantum numbers are
// twice their physical values.
class LadderOracle {
 public:
  LadderOracle(int j1, int j2) : j1_(j1), j2_(j2) {
    for (int m1 = -j1; m1 <= j1; m1 += 2)
      for (int m2 = -j2; m2 <= j2; m2 += 2) {
        index_[{m1, m2}] = static_cast<int>(states_.size());
        states_.push_back({m1, m2});
      }
    const int d = static_cast<int>(states_.size());
    raise_ = Eigen::MatrixXd::Zero(d, d);
    for (int c = 0; c < d; ++c) {
      const auto [m1, m2] = states_[static_cast<std::size_t>(c)];
      if (m1 < j1) raise_(index_.at({m1 + 2, m2}), c) += step(j1, m1);
      if (m2 < j2) raise_(index_.at({m1, m2 + 2}), c) += step(j2, m2);
    }
    const int Jmax = j1 + j2, Jmin = std::abs(j1 - j2);
    for (int J = Jmax; J >= Jmin; J -= 2) build(J);
  }

  double coefficient(int m1, int m2, int J, int M) const {
    auto it = coupled_.find({J, M});
    if (it == coupled_.end()) return 0.0;
    auto idx = index_.find({m1, m2});
    if (idx == index_.end()) return 0.0;
    return it->second(idx->second);
  }

 private:
  // <m+1| j+ |m> for twice-values j, m.
  static double step(int j, int m) { return 0.5 * std::sqrt(static_cast<double>((j - m) * (j + m + 2))); }

  void build(int J) {
    std::vector<int> cols, rows;
    for (int k = 0; k < static_cast<int>(states_.size()); ++k) {
      const int M = states_[static_cast<std::size_t>(k)].first + states_[static_cast<std::size_t>(k)].second;
      if (M == J) cols.push_back(k);
      if (M == J + 2) rows.push_back(k);
    }
    Eigen::MatrixXd block = Eigen::MatrixXd::Zero(static_cast<int>(rows.size()) + 1, static_cast<int>(cols.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (std::size_t c = 0; c < cols.size(); ++c) block(static_cast<int>(r), static_cast<int>(c)) = raise_(rows[r], cols[c]);
    // Highest-weight state: kernel of J+ within M = J.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(block.transpose() * block);
    Eigen::VectorXd top = Eigen::VectorXd::Zero(static_cast<int>(states_.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) top(cols[c]) = es.eigenvectors()(static_cast<int>(c), 0);
    const int lead = index_.at({j1_, J - j1_});
    if (top(lead) < 0) top = -top;
    Eigen::MatrixXd lower = raise_.transpose();
    Eigen::VectorXd v = top;
    for (int M = J; M >= -J; M -= 2) {
      coupled_[{J, M}] = v;
      if (M > -J) v = lower * v / (0.5 * std::sqrt(static_cast<double>((J + M) * (J - M + 2))));
    }
  }

  int j1_, j2_;
  std::vector<std::pair<int, int>> states_;
  std::map<std::pair<int, int>, int> index_;
  Eigen::MatrixXd raise_;
  std::map<std::pair<int, int>, Eigen::VectorXd> coupled_;
};

}  // namespace

TEST(ClebschGordan, TwoSpinValues) {
  EXPECT_NEAR(clebsch_gordan(1, 1, 1, -1, 2, 0), 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(clebsch_gordan(1, 1, 1, 1, 2, 2), 1.0, 1e-15);
  EXPECT_NEAR(clebsch_gordan(1, 1, 1, -1, 0, 0), 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(clebsch_gordan(1, -1, 1, 1, 0, 0), -1.0 / std::sqrt(2.0), 1e-15);
}

TEST(ClebschGordan, IntegerSpinValueFromLadderAlgebra) {
  // (1 0, 1 0 | 2 0) = sqrt(2/3), value produced by the ladder oracle.
  LadderOracle oracle(2, 2);
  EXPECT_NEAR(oracle.coefficient(0, 0, 4, 0), std::sqrt(2.0 / 3.0), 1e-13);
  EXPECT_NEAR(clebsch_gordan(2, 0, 2, 0, 4, 0), std::sqrt(2.0 / 3.0), 1e-14);
}

TEST(ClebschGordan, InvalidInputsGiveZero) {
  EXPECT_EQ(clebsch_gordan(1, 1, 1, 1, 2, 0), 0.0);   // M != m1 + m2
  EXPECT_EQ(clebsch_gordan(1, 1, 1, -1, 4, 0), 0.0);  // triangle
  EXPECT_EQ(clebsch_gordan(1, 3, 1, -1, 2, 2), 0.0);  // |m| > j
  EXPECT_EQ(clebsch_gordan(2, 1, 2, -1, 2, 0), 0.0);  // parity mismatch
}

TEST(ClebschGordan, MatchesLadderOracleUpToSevenHalves) {
  for (int j1 = 0; j1 <= 7; ++j1)
    for (int j2 = 0; j2 <= 7; ++j2) {
      LadderOracle oracle(j1, j2);
      for (int J = std::abs(j1 - j2); J <= j1 + j2; J += 2)
        for (int M = -J; M <= J; M += 2)
          for (int m1 = -j1; m1 <= j1; m1 += 2) {
            const int m2 = M - m1;
            if (std::abs(m2) > j2) continue;
            EXPECT_NEAR(clebsch_gordan(j1, m1, j2, m2, J, M), oracle.coefficient(m1, m2, J, M), 1e-12)
                << j1 << " " << m1 << " " << j2 << " " << m2 << " " << J << " " << M;
          }
    }
}

TEST(ClebschGordan, Orthogonality) {
  double worst = 0.0;
  for (int j1 = 0; j1 <= 7; ++j1)
    for (int j2 = 0; j2 <= 7; ++j2)
      for (int J = std::abs(j1 - j2); J <= j1 + j2; J += 2)
        for (int Jp = std::abs(j1 - j2); Jp <= j1 + j2; Jp += 2)
          for (int M = -std::min(J, Jp); M <= std::min(J, Jp); M += 2) {
            double sum = 0.0;
            for (int m1 = -j1; m1 <= j1; m1 += 2)
              sum += clebsch_gordan(j1, m1, j2, M - m1, J, M) * clebsch_gordan(j1, m1, j2, M - m1, Jp, M);
            worst = std::max(worst, std::abs(sum - (J == Jp ? 1.0 : 0.0)));
          }
  EXPECT_LT(worst, 1e-12);
}

TEST(ClebschGordan, LargeAngularMomentaStayNormalized) {
  const int j1 = 15, j2 = 15;
  for (int J = 0; J <= 30; J += 2) {
    double sum = 0.0;
    for (int m1 = -j1; m1 <= j1; m1 += 2) {
      const double c = clebsch_gordan(j1, m1, j2, -m1, J, 0);
      sum += c * c;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12) << J;
  }
}
