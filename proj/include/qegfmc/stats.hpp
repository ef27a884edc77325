#pragma once

#include <cmath>
#include <vector>

#include "qegfmc/common.hpp"

namespace qegfmc::stats {

inline double mean(const std::vector<double>& x) {
  if (x.empty()) throw NumericalError("mean of an empty series");
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

/// Unbiased sample variance.
inline double variance(const std::vector<double>& x) {
  if (x.size() < 2) return 0.0;
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

struct BlockingLevel {
  std::size_t blocks = 0;
  double stderr = 0.0;
  double stderr_error = 0.0;
};

struct BlockingResult {
  double mean = 0.0;
  double stderr = 0.0;
  std::size_t blocks = 0;  // block count at the chosen level
  std::vector<BlockingLevel> levels;
};

/// Flyvbjerg-Petersen blocking: halve the series by pairwise averaging and
/// take the first level whose error estimate agrees with the next one within
/// its own uncertainty. Levels with fewer than `min_blocks` blocks are not
/// used; if no plateau is found the largest estimate is reported.
inline BlockingResult blocking(std::vector<double> x, std::size_t min_blocks = 16) {
  BlockingResult r;
  r.mean = mean(x);
  while (x.size() >= 2) {
    const double n = static_cast<double>(x.size());
    const double se = std::sqrt(variance(x) / n);
    r.levels.push_back({x.size(), se, se / std::sqrt(2.0 * (n - 1.0))});
    std::vector<double> next(x.size() / 2);
    for (std::size_t k = 0; k < next.size(); ++k) next[k] = 0.5 * (x[2 * k] + x[2 * k + 1]);
    x = std::move(next);
  }
  if (r.levels.empty()) return r;
  std::size_t usable = 0;
  while (usable + 1 < r.levels.size() && r.levels[usable + 1].blocks >= min_blocks) ++usable;
  for (std::size_t l = 0; l < usable; ++l) {
    if (r.levels[l + 1].stderr <= r.levels[l].stderr + r.levels[l].stderr_error) {
      // Plateau reached: keep the larger of the two neighbouring estimates.
      const auto& pick = r.levels[l + 1].stderr > r.levels[l].stderr ? r.levels[l + 1] : r.levels[l];
      r.stderr = pick.stderr;
      r.blocks = pick.blocks;
      return r;
    }
  }
  std::size_t best = 0;
  for (std::size_t l = 0; l <= usable; ++l)
    if (r.levels[l].stderr > r.levels[best].stderr) best = l;
  r.stderr = r.levels[best].stderr;
  r.blocks = r.levels[best].blocks;
  return r;
}

/// Least-squares slope of y against x.
inline double slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw NumericalError("slope needs at least two points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double den = n * sxx - sx * sx;
  if (den == 0.0) throw NumericalError("slope of a degenerate abscissa");
  return (n * sxy - sx * sy) / den;
}

/// Slope of log(y) against log(x).
inline double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  return slope(lx, ly);
}

}  // namespace qegfmc::stats
