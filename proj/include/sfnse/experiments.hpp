#pragma once

// Orchestrated numerical studies: mass table, strong-convergence study,
// energy ensemble and field-evolution snapshots. Monte-Carlo paths fan out
// over a worker pool; every path owns its RNG stream and results are
// aggregated in path-index order, so output does not depend on the thread
// count.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <numeric>
#include <thread>
#include <vector>

#include "sfnse/diagnostics.hpp"
#include "sfnse/dynamics.hpp"
#include "sfnse/errors.hpp"
#include "sfnse/noise.hpp"
#include "sfnse/params.hpp"
#include "sfnse/spectral.hpp"

namespace sfnse {

enum class NoiseProfile { sine, zero };

/// sech(x - center) exp(i velocity x).
struct InitialSoliton {
  double center = 0.0;
  double velocity = 2.0;

  ComplexField sample(const GridSpec& grid) const {
    return sample_field(grid, [&](double x) {
      return std::polar(1.0 / std::cosh(x - center), velocity * x);
    });
  }

  friend bool operator==(const InitialSoliton&, const InitialSoliton&) = default;
};

/// Everything a single trajectory needs.
struct ExperimentSetup {
  GridSpec grid = build_grid(-20.0, 20.0, 400);
  ModelParams model{};
  SchemeParams scheme{};
  Integrator integrator = Integrator::midpoint;
  std::size_t noise_modes = 100;
  NoiseProfile profile = NoiseProfile::sine;
  std::uint64_t seed = 1;
  double horizon = 10.0;
  InitialSoliton initial{};
  unsigned threads = 0;  // 0: hardware concurrency
};

inline NoiseModel make_noise_model(const ExperimentSetup& s) {
  if (s.profile == NoiseProfile::zero) {
    return build_noise_model(
        std::vector<std::vector<double>>(s.noise_modes,
                                         std::vector<double>(s.grid.n, 0.0)),
        s.grid, s.model.epsilon);
  }
  return build_noise_model(s.noise_modes, s.grid, s.model.epsilon);
}

/// Number of steps of size dt covering [0, horizon]; the horizon must be a
/// whole multiple of dt.
inline std::size_t steps_for(double horizon, double dt) {
  if (!(dt > 0.0) || !(horizon >= 0.0)) {
    throw ConfigError("horizon must be >= 0 and dt > 0");
  }
  const double ratio = horizon / dt;
  const double steps = std::round(ratio);
  if (std::abs(ratio - steps) > 1e-9 * std::max(1.0, ratio)) {
    throw ConfigError("horizon " + std::to_string(horizon) +
                      " is not a multiple of dt " + std::to_string(dt));
  }
  return static_cast<std::size_t>(steps);
}

/// Runs fn(i) for i in [0, count) on up to `threads` workers. The first
/// failure by index is rethrown after all workers finish.
inline void parallel_for(std::size_t count, unsigned threads,
                         const std::function<void(std::size_t)>& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// ---------------------------------------------------------------------------
// Mass table

struct MassTableConfig {
  ExperimentSetup setup{};
  std::vector<double> alphas{0.6, 0.75, 0.9};
  std::vector<double> times{0.0, 2.0, 4.0, 6.0, 8.0, 10.0};
  MassMode mass_mode = MassMode::norm;
};

struct MassRow {
  double time = 0.0;
  double alpha = 0.0;
  double mass = 0.0;

  friend bool operator==(const MassRow&, const MassRow&) = default;
};

/// Midpoint evolution per alpha, all driven by the same Wiener path. Rows are
/// ordered by time, then by alpha.
inline std::vector<MassRow> run_mass_table(const MassTableConfig& cfg) {
  const auto& s = cfg.setup;
  const std::size_t steps = steps_for(s.horizon, s.scheme.dt);
  std::vector<std::size_t> sample_steps;
  for (double t : cfg.times) {
    const std::size_t n = steps_for(t, s.scheme.dt);
    if (n > steps) throw ConfigError("mass sample time beyond horizon");
    sample_steps.push_back(n);
  }
  const NoiseModel noise = make_noise_model(s);
  const ComplexField u0 = s.initial.sample(s.grid);
  const WienerPath path =
      steps > 0 ? sample_wiener_path(noise, steps, s.scheme.dt, s.seed) : WienerPath{};

  std::vector<std::vector<double>> masses(cfg.alphas.size(),
                                          std::vector<double>(cfg.times.size()));
  parallel_for(cfg.alphas.size(), s.threads, [&](std::size_t a) {
    ModelParams model = s.model;
    model.alpha = cfg.alphas[a];
    const FractionalOperators ops(s.grid, model.alpha);
    Observers obs;
    obs.on_step = [&](std::size_t n, const ComplexField& u) {
      for (std::size_t t = 0; t < sample_steps.size(); ++t)
        if (sample_steps[t] == n) masses[a][t] = mass(u, s.grid, cfg.mass_mode);
    };
    if (steps == 0) {
      obs.on_step(0, u0);
      return;
    }
    evolve(u0, Integrator::midpoint, model, s.scheme, ops, noise, path, obs);
  });

  std::vector<MassRow> rows;
  for (std::size_t t = 0; t < cfg.times.size(); ++t)
    for (std::size_t a = 0; a < cfg.alphas.size(); ++a)
      rows.push_back({cfg.times[t], cfg.alphas[a], masses[a][t]});
  return rows;
}

// ---------------------------------------------------------------------------
// Strong convergence

struct ConvergenceConfig {
  ExperimentSetup setup{};
  double base_dt = 0.01;
  int levels = 5;     // test levels r = 0..levels-1 with dt = base_dt / 2^r
  int ref_level = 5;  // reference dt = base_dt / 2^ref_level
  std::size_t n_paths = 100;
};

struct ConvergenceReport {
  std::vector<double> dts;
  std::vector<double> errors;  // Monte-Carlo mean of per-path max_n l2 error
  std::vector<double> orders;  // log2(e_r / e_{r+1})
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;
  std::vector<double> ci_halfwidths;  // 95% normal-approximation half-widths
  std::vector<std::vector<double>> per_path_errors;  // n_paths x levels

  double mean_order() const {
    if (orders.empty()) return 0.0;
    return std::accumulate(orders.begin(), orders.end(), 0.0) /
           static_cast<double>(orders.size());
  }

  friend bool operator==(const ConvergenceReport&, const ConvergenceReport&) = default;
};

/// Splitting-scheme strong error against a finer reference on shared paths.
/// Path i is sampled at the reference level from seed derive(master, i); the
/// test levels use exact block sums of those increments.
inline ConvergenceReport run_convergence_study(const ConvergenceConfig& cfg) {
  const auto& s = cfg.setup;
  if (cfg.levels < 1) throw ConfigError("convergence study needs >= 1 level");
  if (cfg.ref_level <= cfg.levels - 1) {
    throw ConfigError("reference level must be finer than every test level");
  }
  if (cfg.n_paths < 1) throw ConfigError("convergence study needs >= 1 path");
  if (s.model.sigma != 0.0) {
    throw ConfigError("convergence study is defined for sigma = 0");
  }
  const auto pow2 = [](int e) { return std::size_t{1} << e; };
  const double ref_dt = cfg.base_dt / static_cast<double>(pow2(cfg.ref_level));
  const std::size_t ref_steps = steps_for(s.horizon, ref_dt);
  if (ref_steps == 0 || ref_steps % pow2(cfg.ref_level) != 0) {
    throw ConfigError("horizon must be a positive multiple of base_dt");
  }
  // Reference states are kept on the finest test level's time grid.
  const std::size_t keep_stride = pow2(cfg.ref_level - (cfg.levels - 1));

  const NoiseModel noise = make_noise_model(s);
  const ComplexField u0 = s.initial.sample(s.grid);
  const FractionalOperators ops(s.grid, s.model.alpha);
  const auto levels = static_cast<std::size_t>(cfg.levels);

  ConvergenceReport report;
  report.n_paths = cfg.n_paths;
  report.seed = s.seed;
  report.per_path_errors.assign(cfg.n_paths, std::vector<double>(levels, 0.0));

  parallel_for(cfg.n_paths, s.threads, [&](std::size_t i) {
    const WienerPath fine = sample_wiener_path(
        noise, ref_steps, ref_dt, CounterNormal::derive(s.seed, i), cfg.ref_level);

    std::vector<ComplexField> reference;
    reference.reserve(ref_steps / keep_stride + 1);
    SchemeParams scheme = s.scheme;
    scheme.dt = ref_dt;
    Observers keep;
    keep.on_step = [&](std::size_t n, const ComplexField& u) {
      if (n % keep_stride == 0) reference.push_back(u);
    };
    evolve(u0, Integrator::splitting, s.model, scheme, ops, noise, fine, keep);

    for (std::size_t r = 0; r < levels; ++r) {
      const WienerPath coarse = coarsen_path(fine, pow2(cfg.ref_level - static_cast<int>(r)));
      const std::size_t ratio = pow2(static_cast<int>(levels - 1 - r));
      scheme.dt = coarse.dt;
      double worst = 0.0;
      Observers cmp;
      cmp.on_step = [&](std::size_t n, const ComplexField& u) {
        worst = std::max(worst, l2_error(reference[n * ratio], u, s.grid));
      };
      evolve(u0, Integrator::splitting, s.model, scheme, ops, noise, coarse, cmp);
      report.per_path_errors[i][r] = worst;
    }
  });

  const double m = static_cast<double>(cfg.n_paths);
  for (std::size_t r = 0; r < levels; ++r) {
    report.dts.push_back(cfg.base_dt / static_cast<double>(pow2(static_cast<int>(r))));
    double sum = 0.0;
    for (std::size_t i = 0; i < cfg.n_paths; ++i) sum += report.per_path_errors[i][r];
    const double mean = sum / m;
    double var = 0.0;
    for (std::size_t i = 0; i < cfg.n_paths; ++i) {
      const double d = report.per_path_errors[i][r] - mean;
      var += d * d;
    }
    var = cfg.n_paths > 1 ? var / (m - 1.0) : 0.0;
    report.errors.push_back(mean);
    report.ci_halfwidths.push_back(1.96 * std::sqrt(var / m));
  }
  for (std::size_t r = 0; r + 1 < levels; ++r) {
    report.orders.push_back(std::log2(report.errors[r] / report.errors[r + 1]));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Energy ensemble

struct EnsembleConfig {
  ExperimentSetup setup{};
  std::size_t n_paths = 10;
};

struct EnsembleReport {
  std::vector<double> times;                         // steps + 1 entries
  std::vector<std::vector<double>> per_path_energy;  // n_paths x (steps + 1)
  std::vector<double> mean_energy;

  friend bool operator==(const EnsembleReport&, const EnsembleReport&) = default;
};

/// Energy series of independent trajectories (path i seeded with
/// derive(seed, i)) and their columnwise mean.
inline EnsembleReport run_energy_ensemble(const EnsembleConfig& cfg) {
  const auto& s = cfg.setup;
  if (cfg.n_paths < 1) throw ConfigError("energy ensemble needs >= 1 path");
  const std::size_t steps = steps_for(s.horizon, s.scheme.dt);
  if (steps == 0) throw ConfigError("energy ensemble needs a positive horizon");
  const NoiseModel noise = make_noise_model(s);
  const ComplexField u0 = s.initial.sample(s.grid);
  const FractionalOperators ops(s.grid, s.model.alpha);

  EnsembleReport report;
  for (std::size_t n = 0; n <= steps; ++n)
    report.times.push_back(static_cast<double>(n) * s.scheme.dt);
  report.per_path_energy.assign(cfg.n_paths, std::vector<double>(steps + 1));

  parallel_for(cfg.n_paths, s.threads, [&](std::size_t i) {
    const WienerPath path = sample_wiener_path(noise, steps, s.scheme.dt,
                                               CounterNormal::derive(s.seed, i));
    auto& series = report.per_path_energy[i];
    Observers obs;
    obs.on_step = [&](std::size_t n, const ComplexField& u) {
      series[n] = energy(u.values, ops, s.model);
    };
    evolve(u0, s.integrator, s.model, s.scheme, ops, noise, path, obs);
  });

  report.mean_energy.assign(steps + 1, 0.0);
  for (const auto& series : report.per_path_energy)
    for (std::size_t n = 0; n <= steps; ++n) report.mean_energy[n] += series[n];
  for (auto& e : report.mean_energy) e /= static_cast<double>(cfg.n_paths);
  return report;
}

// ---------------------------------------------------------------------------
// Field evolution snapshots

struct FieldEvolutionConfig {
  ExperimentSetup setup{};
  std::vector<double> alphas{0.6};
  std::size_t snapshot_stride = 100;   // 0: no snapshots
  std::size_t diagnostics_stride = 0;  // 0: no diagnostics
  MassMode mass_mode = MassMode::norm;
};

struct FieldSnapshot {
  double alpha = 0.0;
  std::size_t step = 0;
  ComplexField field;

  friend bool operator==(const FieldSnapshot&, const FieldSnapshot&) = default;
};

struct FieldEvolution {
  std::vector<FieldSnapshot> snapshots;  // ordered by alpha, then step
  std::vector<std::vector<DiagnosticsRecord>> diagnostics;  // per alpha
};

/// One trajectory per alpha, all on the setup's seed, snapshotting every
/// `snapshot_stride` steps.
inline FieldEvolution run_field_evolution(const FieldEvolutionConfig& cfg) {
  const auto& s = cfg.setup;
  const std::size_t steps = steps_for(s.horizon, s.scheme.dt);
  FieldEvolution out;
  out.diagnostics.resize(cfg.alphas.size());
  if (cfg.snapshot_stride == 0 && cfg.diagnostics_stride == 0) return out;

  const NoiseModel noise = make_noise_model(s);
  const ComplexField u0 = s.initial.sample(s.grid);
  const WienerPath path = sample_wiener_path(noise, std::max<std::size_t>(steps, 1),
                                             s.scheme.dt, s.seed);
  std::vector<std::vector<FieldSnapshot>> per_alpha(cfg.alphas.size());

  parallel_for(cfg.alphas.size(), s.threads, [&](std::size_t a) {
    ModelParams model = s.model;
    model.alpha = cfg.alphas[a];
    const FractionalOperators ops(s.grid, model.alpha);
    Observers obs;
    obs.diagnostics_stride = cfg.diagnostics_stride;
    obs.mass_mode = cfg.mass_mode;
    obs.on_step = [&](std::size_t n, const ComplexField& u) {
      if (cfg.snapshot_stride != 0 && n % cfg.snapshot_stride == 0) {
        per_alpha[a].push_back({model.alpha, n, u});
      }
    };
    if (steps == 0) {
      obs.on_step(0, u0);
      if (cfg.diagnostics_stride != 0) {
        out.diagnostics[a].push_back(observe(u0, ops, model, cfg.mass_mode));
      }
      return;
    }
    auto traj = evolve(u0, s.integrator, model, s.scheme, ops, noise, path, obs);
    out.diagnostics[a] = std::move(traj.diagnostics);
  });

  for (auto& v : per_alpha)
    for (auto& snap : v) out.snapshots.push_back(std::move(snap));
  return out;
}

}  // namespace sfnse
