#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <stdexcept>

#include "sfnse/experiments.hpp"

namespace sfnse {
namespace {

ExperimentSetup small_setup() {
  ExperimentSetup s;
  s.grid = build_grid(-20.0, 20.0, 64);
  s.noise_modes = 10;
  s.horizon = 0.4;
  s.scheme.dt = 0.01;
  s.seed = 7;
  return s;
}

ConvergenceConfig small_convergence() {
  ConvergenceConfig c;
  c.setup = small_setup();
  c.setup.grid = build_grid(0.0, 40.0, 64);
  c.setup.model = {.alpha = 0.75, .lambda = -1.0, .sigma = 0.0, .epsilon = 0.01};
  c.setup.integrator = Integrator::splitting;
  c.setup.initial.center = 20.0;
  c.base_dt = 0.01;
  c.levels = 3;
  c.ref_level = 5;
  c.n_paths = 6;
  return c;
}

TEST(StepsFor, WholeMultiples) {
  EXPECT_EQ(steps_for(10.0, 0.01), 1000u);
  EXPECT_EQ(steps_for(0.0, 0.01), 0u);
  EXPECT_EQ(steps_for(0.4, 0.01 / 32.0), 1280u);
  EXPECT_THROW(steps_for(1.0, 0.3), ConfigError);
  EXPECT_THROW(steps_for(1.0, 0.0), ConfigError);
}

TEST(ParallelFor, VisitsEveryIndexOnceAndRethrowsFirstError) {
  std::vector<std::atomic<int>> hits(100);
  parallel_for(100, 4, [&](std::size_t i) { ++hits[i]; });
  for (auto& h : hits) EXPECT_EQ(h.load(), 1);
  try {
    parallel_for(10, 3, [](std::size_t i) {
      if (i == 3 || i == 7) throw std::runtime_error(std::to_string(i));
    });
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "3");
  }
}

TEST(MassTable, RowsOrderedAndConserved) {
  MassTableConfig cfg;
  cfg.setup = small_setup();
  cfg.times = {0.0, 0.2, 0.4};
  const auto rows = run_mass_table(cfg);
  ASSERT_EQ(rows.size(), 9u);
  EXPECT_EQ(rows[0].time, 0.0);
  EXPECT_EQ(rows[0].alpha, 0.6);
  EXPECT_EQ(rows[1].alpha, 0.75);
  EXPECT_EQ(rows[8].time, 0.4);
  const double m0 = rows[0].mass;
  for (const auto& r : rows) EXPECT_NEAR(r.mass, m0, 1e-10) << r.time << " " << r.alpha;
}

TEST(MassTable, InitialMassOfSoliton) {
  MassTableConfig cfg;
  cfg.setup = small_setup();
  cfg.setup.grid = build_grid(-20.0, 20.0, 400);
  cfg.setup.horizon = 0.0;
  cfg.times = {0.0};
  const auto rows = run_mass_table(cfg);
  for (const auto& r : rows) EXPECT_NEAR(r.mass, 1.414211518677561, 5e-6);
}

TEST(MassTable, RejectsTimesBeyondHorizon) {
  MassTableConfig cfg;
  cfg.setup = small_setup();
  cfg.times = {0.0, 1.0};
  EXPECT_THROW(run_mass_table(cfg), ConfigError);
}

TEST(MassTable, ThreadCountDoesNotChangeOutput) {
  MassTableConfig cfg;
  cfg.setup = small_setup();
  cfg.times = {0.0, 0.4};
  cfg.setup.threads = 1;
  const auto serial = run_mass_table(cfg);
  cfg.setup.threads = 3;
  EXPECT_EQ(run_mass_table(cfg), serial);
}

TEST(Convergence, ErrorsDecreaseAndAreReproducible) {
  auto cfg = small_convergence();
  cfg.setup.threads = 1;
  const auto rep = run_convergence_study(cfg);
  ASSERT_EQ(rep.errors.size(), 3u);
  ASSERT_EQ(rep.orders.size(), 2u);
  EXPECT_EQ(rep.dts[0], 0.01);
  EXPECT_EQ(rep.dts[2], 0.0025);
  for (std::size_t r = 1; r < rep.errors.size(); ++r) EXPECT_LT(rep.errors[r], rep.errors[r - 1]);
  for (double h : rep.ci_halfwidths) EXPECT_GE(h, 0.0);
  EXPECT_EQ(rep.n_paths, 6u);
  EXPECT_EQ(rep.seed, cfg.setup.seed);

  cfg.setup.threads = 4;
  EXPECT_EQ(run_convergence_study(cfg), rep);
}

TEST(Convergence, NoiseFreeSplittingIsExact) {
  auto cfg = small_convergence();
  cfg.setup.model.epsilon = 0.0;
  cfg.n_paths = 2;
  const auto rep = run_convergence_study(cfg);
  for (double e : rep.errors) EXPECT_LT(e, 1e-12);
}

TEST(Convergence, ConfigErrors) {
  auto cfg = small_convergence();
  cfg.ref_level = 2;
  EXPECT_THROW(run_convergence_study(cfg), ConfigError);
  cfg = small_convergence();
  cfg.setup.model.sigma = 1.0;
  EXPECT_THROW(run_convergence_study(cfg), ConfigError);
  cfg = small_convergence();
  cfg.n_paths = 0;
  EXPECT_THROW(run_convergence_study(cfg), ConfigError);
  cfg = small_convergence();
  cfg.setup.horizon = 0.013;
  EXPECT_THROW(run_convergence_study(cfg), ConfigError);
}

TEST(EnergyEnsemble, MeanIsColumnMean) {
  EnsembleConfig cfg;
  cfg.setup = small_setup();
  cfg.setup.horizon = 0.1;
  cfg.n_paths = 4;
  const auto rep = run_energy_ensemble(cfg);
  ASSERT_EQ(rep.times.size(), 11u);
  ASSERT_EQ(rep.per_path_energy.size(), 4u);
  for (std::size_t n = 0; n < rep.times.size(); ++n) {
    double s = 0.0;
    for (const auto& p : rep.per_path_energy) s += p[n];
    EXPECT_NEAR(rep.mean_energy[n], s / 4.0, 1e-15 * std::abs(s));
  }
  // Every path starts from the same state.
  for (const auto& p : rep.per_path_energy) EXPECT_EQ(p[0], rep.per_path_energy[0][0]);
  EXPECT_NE(rep.per_path_energy[0].back(), rep.per_path_energy[1].back());
}

TEST(EnergyEnsemble, DeterministicAcrossThreadCounts) {
  EnsembleConfig cfg;
  cfg.setup = small_setup();
  cfg.setup.horizon = 0.1;
  cfg.n_paths = 5;
  cfg.setup.threads = 1;
  const auto a = run_energy_ensemble(cfg);
  cfg.setup.threads = 5;
  EXPECT_EQ(run_energy_ensemble(cfg), a);
}

TEST(EnergyEnsemble, ConfigErrors) {
  EnsembleConfig cfg;
  cfg.setup = small_setup();
  cfg.n_paths = 0;
  EXPECT_THROW(run_energy_ensemble(cfg), ConfigError);
  cfg.n_paths = 1;
  cfg.setup.horizon = 0.0;
  EXPECT_THROW(run_energy_ensemble(cfg), ConfigError);
}

TEST(FieldEvolution, SnapshotsPerAlpha) {
  FieldEvolutionConfig cfg;
  cfg.setup = small_setup();
  cfg.alphas = {0.6, 0.9};
  cfg.snapshot_stride = 20;
  cfg.diagnostics_stride = 10;
  const auto out = run_field_evolution(cfg);
  ASSERT_EQ(out.snapshots.size(), 6u);  // steps 0, 20, 40 per alpha
  EXPECT_EQ(out.snapshots[0].alpha, 0.6);
  EXPECT_EQ(out.snapshots[2].step, 40u);
  EXPECT_EQ(out.snapshots[3].alpha, 0.9);
  EXPECT_NEAR(out.snapshots[2].field.time, 0.4, 1e-15);
  ASSERT_EQ(out.diagnostics.size(), 2u);
  EXPECT_EQ(out.diagnostics[1].size(), 5u);
  EXPECT_EQ(run_field_evolution(cfg).snapshots, out.snapshots);
}

TEST(FieldEvolution, NothingRequestedGivesEmptySeries) {
  FieldEvolutionConfig cfg;
  cfg.setup = small_setup();
  cfg.snapshot_stride = 0;
  const auto out = run_field_evolution(cfg);
  EXPECT_TRUE(out.snapshots.empty());
  for (const auto& d : out.diagnostics) EXPECT_TRUE(d.empty());
}

TEST(FieldEvolution, ZeroProfileMatchesNoiseFreeRun) {
  FieldEvolutionConfig cfg;
  cfg.setup = small_setup();
  cfg.snapshot_stride = 40;
  cfg.setup.profile = NoiseProfile::zero;
  const auto zero_profile = run_field_evolution(cfg);
  cfg.setup.profile = NoiseProfile::sine;
  cfg.setup.model.epsilon = 0.0;
  const auto no_noise = run_field_evolution(cfg);
  ASSERT_EQ(zero_profile.snapshots.size(), no_noise.snapshots.size());
  EXPECT_EQ(zero_profile.snapshots.back().field.values, no_noise.snapshots.back().field.values);
}

}  // namespace
}  // namespace sfnse
