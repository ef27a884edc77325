#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qegfmc/common.hpp"
#include "qegfmc/parallel.hpp"
#include "qegfmc/rng.hpp"
#include "qegfmc/sparse_matrix.hpp"
#include "qegfmc/stats.hpp"

namespace qegfmc {

struct Walker {
  int config = 0;
  double weight = 0.0;
};

struct FixedNodeParams {
  std::optional<double> lambda;  // unset: minimum_lambda + 1
  double gamma = 0.0;
  int n_walkers = 1000;
  long n_steps = 1000;
  long equilibration_steps = -1;  // negative: first 10% of the steps
  std::uint64_t seed = 1;
  int workers = 1;
  bool population_control = true;

  long equilibration() const { return equilibration_steps >= 0 ? equilibration_steps : n_steps / 10; }
  long measured_steps() const { return n_steps - equilibration(); }
  long samples() const { return measured_steps() * n_walkers; }
};

/// Sum of the positive off-diagonal entries in column x.
inline double sign_flip_potential(const SparseHamiltonian& h, int x) {
  if (x < 0 || x >= h.dim()) throw DimensionError("configuration index out of range");
  // H is symmetric, so the row holds the same entries as the column.
  double v = 0.0;
  for (const auto& e : h.row(x))
    if (e.col != x && e.value > 0.0) v += e.value;
  return v;
}

/// Smallest Λ keeping every diagonal entry of G^fn nonnegative.
inline double minimum_lambda(const SparseHamiltonian& h, double gamma) {
  double m = -std::numeric_limits<double>::infinity();
  for (int x = 0; x < h.dim(); ++x) m = std::max(m, h.diagonal(x) + (1.0 + gamma) * sign_flip_potential(h, x));
  return m;
}

inline double default_lambda(const SparseHamiltonian& h, double gamma) { return minimum_lambda(h, gamma) + 1.0; }

inline void validate(const FixedNodeParams& p) {
  if (!(p.gamma >= 0.0 && p.gamma <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
  if (p.n_walkers < 1) throw ConfigError("walker count must be positive");
  if (p.n_steps < 1) throw ConfigError("step count must be positive");
  if (p.equilibration() >= p.n_steps) throw ConfigError("equilibration must leave at least one measured step");
  if (p.workers < 1) throw ConfigError("worker count must be positive");
  if (p.workers > p.n_walkers) throw ConfigError("more workers than walkers");
}

/// Fixed-node Green's function. Off-diagonal: -H where H <= 0, gamma H where
/// H > 0; diagonal: Λ - H - (1 + gamma) V_sf.
inline SparseHamiltonian fixed_node_green(const SparseHamiltonian& h, double gamma, double lambda) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
  const double tol = 1e-12 * std::max(1.0, std::abs(lambda));
  std::vector<std::map<int, double>> acc(static_cast<std::size_t>(h.dim()));
  for (int x = 0; x < h.dim(); ++x) {
    auto& out = acc[static_cast<std::size_t>(x)];
    for (const auto& e : h.row(x)) {
      if (e.col == x) continue;
      if (e.value <= 0.0)
        out[e.col] = -e.value;
      else if (gamma > 0.0)
        out[e.col] = gamma * e.value;
    }
    const double d = lambda - h.diagonal(x) - (1.0 + gamma) * sign_flip_potential(h, x);
    if (d < -tol)
      throw ConfigError("lambda too small: G^fn diagonal " + std::to_string(d) + " at configuration " +
                        std::to_string(x));
    out[x] = std::max(d, 0.0);
  }
  return SparseHamiltonian::from_maps(acc, 0.0);
}

/// Per-column transition tables for sampling x' with probability
/// G(x', x) / sum_x' G(x', x).
class ColumnSampler {
 public:
  explicit ColumnSampler(const SparseHamiltonian& g) : targets_(g.dim()), cumulative_(g.dim()), sums_(g.dim(), 0.0) {
    for (int r = 0; r < g.dim(); ++r)
      for (const auto& e : g.row(r)) {
        if (e.value < 0.0) throw NumericalError("Green's function has a negative entry");
        if (e.value == 0.0) continue;
        targets_[e.col].push_back(r);
        cumulative_[e.col].push_back(e.value);
      }
    for (int c = 0; c < g.dim(); ++c) {
      double s = 0.0;
      for (double& v : cumulative_[c]) v = (s += v);
      sums_[c] = s;
    }
  }

  int dim() const { return static_cast<int>(sums_.size()); }
  double column_sum(int x) const { return sums_[x]; }

  int sample(int x, SplitMix64& rng) const {
    const auto& cum = cumulative_[x];
    const double u = rng.uniform() * sums_[x];
    auto it = std::upper_bound(cum.begin(), cum.end(), u);
    if (it == cum.end()) --it;
    return targets_[x][static_cast<std::size_t>(it - cum.begin())];
  }

 private:
  std::vector<std::vector<int>> targets_;
  std::vector<std::vector<double>> cumulative_;
  std::vector<double> sums_;
};

/// Comb resampling: `target` walkers placed proportional to |weight|, each
/// carrying sign(weight) * total / target.
inline std::vector<Walker> population_control(const std::vector<Walker>& walkers, int target, SplitMix64& rng) {
  if (target < 1) throw ConfigError("population target must be positive");
  double total = 0.0;
  for (const auto& w : walkers) total += std::abs(w.weight);
  if (!(total > 0.0)) throw NumericalError("population control with zero total weight");
  const double step = total / target;
  std::vector<Walker> out;
  out.reserve(static_cast<std::size_t>(target));
  double tooth = rng.uniform() * step;
  double edge = 0.0;
  for (const auto& w : walkers) {
    edge += std::abs(w.weight);
    while (tooth < edge && static_cast<int>(out.size()) < target) {
      out.push_back({w.config, w.weight > 0.0 ? step : -step});
      tooth += step;
    }
  }
  // Rounding at the last edge can leave a tooth unplaced.
  while (static_cast<int>(out.size()) < target) {
    auto last = std::find_if(walkers.rbegin(), walkers.rend(), [](const Walker& w) { return w.weight != 0.0; });
    out.push_back({last->config, last->weight > 0.0 ? step : -step});
  }
  return out;
}

/// Walkers representing a real initial vector: comb-sampled on |φ(x)| with
/// weights sign(φ(x)) |φ|_1 / count. A global phase is removed first.
inline std::vector<Walker> initial_walkers(const VectorXc& phi, int count, SplitMix64& rng) {
  if (phi.size() == 0) throw DimensionError("empty initial state");
  Eigen::Index big = 0;
  phi.cwiseAbs().maxCoeff(&big);
  if (std::abs(phi(big)) == 0.0) throw NumericalError("initial state is zero");
  const cplx phase = std::abs(phi(big)) / phi(big);
  std::vector<Walker> pool;
  for (Eigen::Index x = 0; x < phi.size(); ++x) {
    const cplx a = phi(x) * phase;
    if (std::abs(a.imag()) > 1e-8 * std::abs(phi(big)))
      throw NumericalError("initial state must be real up to a global phase");
    if (a.real() != 0.0) pool.push_back({static_cast<int>(x), a.real()});
  }
  return population_control(pool, count, rng);
}

/// Per-step accumulators of the mixed estimator.
struct StepTally {
  cplx numerator{0.0, 0.0};
  cplx denominator{0.0, 0.0};
  long walkers = 0;
  long frozen = 0;
};

/// `log_scale` is the accumulated log of the factors divided out of the
/// weights so far; true weights are weight * exp(log_scale).
using StepObserver = std::function<void(long step, const std::vector<Walker>&, double log_scale)>;

/// Advances the population n_steps times under G, calling observe after step
/// k (k = 1..n_steps). Weights are rescaled to unit mean modulus after every
/// step; estimator ratios are unaffected. Walkers in a column with zero sum
/// are frozen with weight 0. Returns the number of such events.
inline long propagate(const ColumnSampler& g, std::vector<Walker>& walkers, long n_steps, SplitMix64& rng,
                      const StepObserver& observe, bool reconfigure = true) {
  if (walkers.empty()) throw ConfigError("propagate needs at least one walker");
  const int target = static_cast<int>(walkers.size());
  long frozen = 0;
  double log_scale = 0.0;
  for (long k = 1; k <= n_steps; ++k) {
    double total = 0.0;
    for (auto& w : walkers) {
      if (w.weight == 0.0) continue;
      const double s = g.column_sum(w.config);
      if (s <= 0.0) {
        w.weight = 0.0;
        ++frozen;
        continue;
      }
      w.config = g.sample(w.config, rng);
      w.weight *= s;
      total += std::abs(w.weight);
    }
    if (!(total > 0.0)) throw NumericalError("every walker reached a dead-end configuration");
    if (reconfigure) walkers = population_control(walkers, target, rng);
    const double scale = static_cast<double>(target) / (reconfigure ? target * std::abs(walkers[0].weight) : total);
    for (auto& w : walkers) w.weight *= scale;
    log_scale -= std::log(scale);
    if (observe) observe(k, walkers, log_scale);
  }
  return frozen;
}

/// Recorded configurations and weights after equilibration.
struct Trajectory {
  long first_step = 0;
  std::vector<std::vector<Walker>> steps;
  std::vector<double> log_scale;
  long frozen = 0;
};

inline Trajectory propagate(const SparseHamiltonian& g, std::vector<Walker> walkers, long n_steps, long equilibration,
                            SplitMix64& rng, bool reconfigure = true) {
  Trajectory t;
  t.first_step = equilibration + 1;
  ColumnSampler sampler(g);
  t.frozen = propagate(
      sampler, walkers, n_steps, rng,
      [&](long k, const std::vector<Walker>& w, double ls) {
        if (k <= equilibration) return;
        t.steps.push_back(w);
        t.log_scale.push_back(ls);
      },
      reconfigure);
  return t;
}

enum class TrialKind { ClassicalVector, QuantumShadow };

inline std::string to_string(TrialKind k) { return k == TrialKind::ClassicalVector ? "classical" : "quantum"; }

/// Trial state as seen by the estimator: the vector u with
/// numerator conj((H u)(x)) and denominator conj(u(x)) per walker. For a
/// classical trial u = φ_T; for a quantum trial u = ρ_T φ_ref, so both
/// accumulators carry the common factor <φ_ref|φ_T>.
struct TrialStateHandle {
  TrialKind kind = TrialKind::ClassicalVector;
  VectorXc u;

  static TrialStateHandle classical(VectorXc amplitudes) { return {TrialKind::ClassicalVector, std::move(amplitudes)}; }

  /// `rho_phi_ref` is ρ_T applied to the reference state, in the basis.
  static TrialStateHandle quantum(VectorXc rho_phi_ref) { return {TrialKind::QuantumShadow, std::move(rho_phi_ref)}; }

  static TrialStateHandle quantum(const MatrixXc& rho, const VectorXc& phi_ref) {
    if (rho.rows() != phi_ref.size()) throw DimensionError("density and reference dimensions differ");
    return quantum(VectorXc(rho * phi_ref));
  }
};

/// Precomputed per-configuration estimator factors.
class MixedEvaluator {
 public:
  MixedEvaluator(const SparseHamiltonian& h, const TrialStateHandle& trial) {
    if (trial.u.size() != h.dim()) throw DimensionError("trial dimension does not match the basis");
    if (trial.u.norm() == 0.0) throw NumericalError("trial state vanishes");
    den_ = trial.u.conjugate();
    num_ = h.multiply(trial.u).conjugate();
  }

  void accumulate(const std::vector<Walker>& walkers, StepTally& t) const {
    for (const auto& w : walkers) {
      t.numerator += w.weight * num_(w.config);
      t.denominator += w.weight * den_(w.config);
      ++t.walkers;
    }
  }

 private:
  VectorXc num_;
  VectorXc den_;
};

struct EnergyEstimate {
  double value = 0.0;
  double stderr = 0.0;
  double imag = 0.0;  // imaginary part of the ratio, zero in expectation
  long n_samples = 0;
  std::size_t blocks = 0;
  cplx denominator_mean{0.0, 0.0};
  double denominator_stderr = 0.0;
  bool reliable = true;
  long frozen = 0;
  std::string autocorrelation_note;
};

/// Ratio estimate from per-step tallies. The error comes from blocking the
/// linearized residual series (N_k - E D_k) / mean(D).
inline EnergyEstimate estimate_from_tallies(const std::vector<StepTally>& series) {
  if (series.empty()) throw NumericalError("no measured steps");
  EnergyEstimate e;
  cplx sn = 0.0, sd = 0.0;
  for (const auto& t : series) {
    sn += t.numerator;
    sd += t.denominator;
    e.n_samples += t.walkers;
    e.frozen += t.frozen;
  }
  const double n = static_cast<double>(series.size());
  e.denominator_mean = sd / n;
  const double dmod = std::abs(e.denominator_mean);
  const cplx dir = dmod > 0.0 ? std::conj(e.denominator_mean) / dmod : cplx{1.0, 0.0};
  std::vector<double> dproj;
  dproj.reserve(series.size());
  for (const auto& t : series) dproj.push_back((dir * t.denominator).real());
  const auto db = stats::blocking(dproj);
  e.denominator_stderr = db.stderr;
  e.reliable = dmod > 5.0 * db.stderr && dmod > 0.0;
  if (dmod == 0.0) {
    e.value = std::numeric_limits<double>::quiet_NaN();
    e.imag = e.value;
    e.stderr = std::numeric_limits<double>::infinity();
    e.autocorrelation_note = "denominator vanished";
    return e;
  }
  const cplx ratio = sn / sd;
  e.value = ratio.real();
  e.imag = ratio.imag();
  std::vector<double> residual;
  residual.reserve(series.size());
  for (const auto& t : series) residual.push_back(((t.numerator - ratio * t.denominator) / e.denominator_mean).real());
  const auto rb = stats::blocking(residual);
  e.stderr = rb.stderr;
  e.blocks = rb.blocks;
  const double naive = rb.levels.empty() ? 0.0 : rb.levels.front().stderr;
  e.autocorrelation_note = "blocking: " + std::to_string(rb.levels.size()) + " levels, " + std::to_string(rb.blocks) +
                           " blocks at plateau, stderr/naive = " +
                           std::to_string(naive > 0.0 ? rb.stderr / naive : 1.0);
  if (!e.reliable) e.autocorrelation_note += "; denominator within 5 sigma of zero";
  return e;
}

inline EnergyEstimate mixed_energy(const SparseHamiltonian& h, const TrialStateHandle& trial, const Trajectory& traj) {
  MixedEvaluator ev(h, trial);
  std::vector<StepTally> series(traj.steps.size());
  for (std::size_t k = 0; k < traj.steps.size(); ++k) ev.accumulate(traj.steps[k], series[k]);
  if (!series.empty()) series.front().frozen = traj.frozen;
  return estimate_from_tallies(series);
}

/// Cumulative ratio after each measured step.
inline std::vector<double> running_energy(const std::vector<StepTally>& series) {
  std::vector<double> out;
  out.reserve(series.size());
  cplx sn = 0.0, sd = 0.0;
  for (const auto& t : series) {
    sn += t.numerator;
    sd += t.denominator;
    out.push_back(std::abs(sd) > 0.0 ? (sn / sd).real() : std::numeric_limits<double>::quiet_NaN());
  }
  return out;
}

struct FngfmcResult {
  EnergyEstimate energy;
  double lambda = 0.0;
  double gamma = 0.0;
  TrialKind trial = TrialKind::ClassicalVector;
  FixedNodeParams params;
  std::vector<StepTally> series;  // merged over workers, measured steps only
};

struct TrajectoryDump {
  std::string path;  // empty: no dump
};

/// Runs independent populations on `params.workers` workers, each on its
/// own RNG substream, and sums their per-step tallies.
inline FngfmcResult run_fngfmc(const SparseHamiltonian& h, const FixedNodeParams& params,
                               const TrialStateHandle& trial, const VectorXc& initial,
                               const TrajectoryDump& dump = {}) {
  validate(params);
  if (initial.size() != h.dim()) throw DimensionError("initial state dimension does not match the basis");
  FngfmcResult res;
  res.params = params;
  res.gamma = params.gamma;
  res.trial = trial.kind;
  res.lambda = params.lambda ? *params.lambda : default_lambda(h, params.gamma);
  const auto g = fixed_node_green(h, params.gamma, res.lambda);
  const ColumnSampler sampler(g);
  const MixedEvaluator ev(h, trial);
  const long equil = params.equilibration();
  const long measured = params.measured_steps();

  struct WorkerOut {
    std::vector<StepTally> series;
    std::vector<std::vector<Walker>> recorded;
  };
  std::vector<WorkerOut> outs(static_cast<std::size_t>(params.workers));
  parallel_for(outs.size(), params.workers, [&](std::size_t w) {
    const int count = params.n_walkers / params.workers + (static_cast<int>(w) < params.n_walkers % params.workers);
    SplitMix64 rng(substream_seed(params.seed, {0x67666d63ull, w}));
    auto walkers = initial_walkers(initial, count, rng);
    auto& out = outs[w];
    out.series.resize(static_cast<std::size_t>(measured));
    const long frozen = propagate(
        sampler, walkers, params.n_steps, rng,
        [&](long k, const std::vector<Walker>& ws, double) {
          if (k <= equil) return;
          ev.accumulate(ws, out.series[static_cast<std::size_t>(k - equil - 1)]);
          if (!dump.path.empty()) out.recorded.push_back(ws);
        },
        params.population_control);
    out.series.front().frozen = frozen;
  });

  res.series.resize(static_cast<std::size_t>(measured));
  for (const auto& out : outs)
    for (std::size_t k = 0; k < res.series.size(); ++k) {
      res.series[k].numerator += out.series[k].numerator;
      res.series[k].denominator += out.series[k].denominator;
      res.series[k].walkers += out.series[k].walkers;
      res.series[k].frozen += out.series[k].frozen;
    }
  res.energy = estimate_from_tallies(res.series);

  if (!dump.path.empty()) {
    std::ofstream f(dump.path);
    if (!f) throw ConfigError("cannot write trajectory to " + dump.path);
    f << "# qegfmc trajectory v1\nstep,worker,config,weight\n";
    f.precision(17);
    for (std::size_t w = 0; w < outs.size(); ++w)
      for (std::size_t k = 0; k < outs[w].recorded.size(); ++k)
        for (const auto& wk : outs[w].recorded[k])
          f << (equil + 1 + static_cast<long>(k)) << ',' << w << ',' << wk.config << ',' << wk.weight << '\n';
  }
  return res;
}

inline nlohmann::json to_json(const EnergyEstimate& e) {
  return {{"value", e.value},
          {"stderr", e.stderr},
          {"imag", e.imag},
          {"samples", e.n_samples},
          {"blocks", e.blocks},
          {"denominator", {e.denominator_mean.real(), e.denominator_mean.imag()}},
          {"denominator_stderr", e.denominator_stderr},
          {"reliable", e.reliable},
          {"frozen_walkers", e.frozen},
          {"autocorrelation_note", e.autocorrelation_note}};
}

inline nlohmann::json to_json(const FngfmcResult& r) {
  nlohmann::json j = to_json(r.energy);
  j["lambda"] = r.lambda;
  j["gamma"] = r.gamma;
  j["trial"] = to_string(r.trial);
  j["walkers"] = r.params.n_walkers;
  j["steps"] = r.params.n_steps;
  j["equilibration_steps"] = r.params.equilibration();
  j["seed"] = r.params.seed;
  j["workers"] = r.params.workers;
  j["population_control"] = r.params.population_control;
  return j;
}

}  // namespace qegfmc
