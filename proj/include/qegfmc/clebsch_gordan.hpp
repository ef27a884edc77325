#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>

namespace qegfmc {

namespace detail {

inline double log_factorial(int n) {
  static const std::array<double, 171> table = [] {
    std::array<double, 171> t{};
    t[0] = 0.0;
    for (std::size_t k = 1; k < t.size(); ++k) t[k] = t[k - 1] + std::log(static_cast<double>(k));
    return t;
  }();
  return n < static_cast<int>(table.size()) ? table[static_cast<std::size_t>(n)] : std::lgamma(n + 1.0);
}

}  // namespace detail

/// True when three angular momenta (given as twice their values) can couple.
constexpr bool triangle_ok(int j1x2, int j2x2, int jx2) {
  return jx2 >= 0 && jx2 >= (j1x2 > j2x2 ? j1x2 - j2x2 : j2x2 - j1x2) && jx2 <= j1x2 + j2x2 &&
         ((j1x2 + j2x2 + jx2) % 2 == 0);
}

/// <j1 m1, j2 m2 | J M> in the Condon-Shortley convention, all arguments
/// twice their physical value. Invalid combinations return 0.
///
/// Racah's single-sum formula evaluated in log space, so it stays accurate for
/// the j <= 15/2 range the shell model needs.
inline double clebsch_gordan(int j1, int m1, int j2, int m2, int J, int M) {
  if (j1 < 0 || j2 < 0 || J < 0) return 0.0;
  if (m1 + m2 != M) return 0.0;
  if (std::abs(m1) > j1 || std::abs(m2) > j2 || std::abs(M) > J) return 0.0;
  if ((j1 + m1) % 2 != 0 || (j2 + m2) % 2 != 0 || (J + M) % 2 != 0) return 0.0;
  if (!triangle_ok(j1, j2, J)) return 0.0;

  // Integer arguments of the factorials.
  const int a = (j1 + j2 - J) / 2;
  const int b = (j1 - j2 + J) / 2;
  const int c = (-j1 + j2 + J) / 2;
  const int d = (j1 + j2 + J) / 2 + 1;
  const int e1 = (j1 + m1) / 2, f1 = (j1 - m1) / 2;
  const int e2 = (j2 + m2) / 2, f2 = (j2 - m2) / 2;
  const int eJ = (J + M) / 2, fJ = (J - M) / 2;

  using detail::log_factorial;
  const double log_prefactor =
      0.5 * (std::log(J + 1.0) + log_factorial(a) + log_factorial(b) + log_factorial(c) -
             log_factorial(d) + log_factorial(e1) + log_factorial(f1) + log_factorial(e2) +
             log_factorial(f2) + log_factorial(eJ) + log_factorial(fJ));

  // Sum over k where every factorial argument is non-negative.
  const int k_min = std::max({0, (j2 - J - m1) / 2, (j1 - J + m2) / 2});
  const int k_max = std::min({a, f1, e2});
  double sum = 0.0;
  for (int k = k_min; k <= k_max; ++k) {
    const double log_term = log_factorial(k) + log_factorial(a - k) + log_factorial(f1 - k) +
                            log_factorial(e2 - k) + log_factorial((J - j2 + m1) / 2 + k) +
                            log_factorial((J - j1 - m2) / 2 + k);
    const double term = std::exp(log_prefactor - log_term);
    sum += (k % 2 == 0) ? term : -term;
  }
  return sum;
}

}  // namespace qegfmc
