#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "sfnse/dynamics.hpp"
#include "test_support.hpp"

namespace sfnse {
namespace {

using testing::max_abs_diff;
using testing::random_field;
constexpr double kPi = std::numbers::pi;

ComplexField smooth_state(const GridSpec& g) {
  return sample_field(g, [](double x) {
    return Complex(0.8 * std::cos(x) + 0.3, 0.5 * std::sin(2.0 * x));
  });
}

std::vector<double> random_noise(std::size_t n, std::mt19937_64& rng, double scale) {
  return testing::random_real(n, rng, scale);
}

TEST(Midpoint, LinearStepIsCayleyTransformPerMode) {
  std::mt19937_64 rng(1);
  const auto g = build_grid(-20.0, 20.0, 64);
  const ModelParams model{.alpha = 0.75, .lambda = 0.0, .sigma = 1.0, .epsilon = 0.0};
  const SchemeParams scheme{.dt = 0.05};
  const auto u = random_field(g, rng);
  const std::vector<double> dW(g.n, 0.0);
  const auto next = midpoint_step(u, dW, model, scheme, g);
  const auto c0 = testing::naive_dft(u.values, g);
  const auto c1 = testing::naive_dft(next.values, g);
  for (std::size_t slot = 0; slot < g.n; ++slot) {
    const double lam =
        std::pow(std::abs(static_cast<double>(signed_mode(slot, g.n)) * g.mu), 1.5);
    const Complex factor = Complex(2.0, -scheme.dt * lam) / Complex(2.0, scheme.dt * lam);
    EXPECT_NEAR(std::abs(factor), 1.0, 1e-15);
    EXPECT_LT(std::abs(c1[slot] - factor * c0[slot]), 1e-13) << "slot " << slot;
  }
  EXPECT_NEAR(next.time, u.time + scheme.dt, 1e-15);
}

TEST(Midpoint, SatisfiesImplicitRelation) {
  std::mt19937_64 rng(2);
  const auto g = build_grid(-20.0, 20.0, 64);
  const ModelParams model{.alpha = 0.6, .lambda = -1.0, .sigma = 1.0, .epsilon = 0.01};
  const SchemeParams scheme{.dt = 0.01};
  const FractionalOperators ops(g, model.alpha);
  for (int trial = 0; trial < 10; ++trial) {
    const auto u = random_field(g, rng, 0.5);
    const auto dW = random_noise(g.n, rng, 0.01);
    const auto next = midpoint_step(u, dW, model, scheme, ops);
    EXPECT_LE(midpoint_residual(u, next, dW, model, scheme.dt, ops), 10.0 * scheme.fp_tol);
  }
}

TEST(Midpoint, ConservesMassForAnyNoise) {
  std::mt19937_64 rng(3);
  const auto g = build_grid(-20.0, 20.0, 32);
  const SchemeParams scheme{.dt = 0.01};
  for (double alpha : {0.6, 0.75, 0.9})
    for (double sigma : {0.0, 1.0, 2.0})
      for (double lambda : {1.0, -1.0}) {
        const ModelParams model{.alpha = alpha, .lambda = lambda, .sigma = sigma, .epsilon = 0.1};
        const FractionalOperators ops(g, alpha);
        for (int trial = 0; trial < 5; ++trial) {
          const auto u = random_field(g, rng, 0.5);
          const auto dW = random_noise(g.n, rng, 0.05);
          const auto next = midpoint_step(u, dW, model, scheme, ops);
          EXPECT_LE(std::abs(mass(next, g) - mass(u, g)), 100.0 * scheme.fp_tol)
              << "alpha " << alpha << " sigma " << sigma << " lambda " << lambda;
        }
      }
}

// One step against RK4 on the dense system with 1000 substeps: the local
// error is O(dt^3), so halving dt shrinks it by about 8.
TEST(Midpoint, LocalErrorAgainstRungeKutta) {
  const auto g = build_grid(0.0, 2.0 * kPi, 8);
  for (double lambda : {1.0, -1.0}) {
    const ModelParams model{.alpha = 0.75, .lambda = lambda, .sigma = 1.0, .epsilon = 0.0};
    const auto d2 = materialize_operator(g, model.alpha, OperatorKind::d2);
    const auto u = smooth_state(g);
    const std::vector<double> dW(g.n, 0.0);
    double prev_err = 0.0;
    for (double dt : {0.02, 0.01, 0.005}) {
      const SchemeParams scheme{.dt = dt, .fp_tol = 1e-14};
      const auto mp = midpoint_step(u, dW, model, scheme, g);
      const auto ref = testing::rk4(d2, u.values, lambda, model.sigma, dt / 1000.0, 1000);
      const double err = max_abs_diff(mp.values, ref);
      EXPECT_LT(err, dt * dt);
      if (prev_err > 0.0) {
        EXPECT_GT(prev_err / err, 6.0) << "dt " << dt;
      }
      prev_err = err;
    }
  }
}

TEST(Midpoint, DeterministicGlobalOrderTwo) {
  const auto g = build_grid(0.0, 2.0 * kPi, 16);
  const ModelParams model{.alpha = 0.6, .lambda = 1.0, .sigma = 1.0, .epsilon = 0.0};
  const auto d2 = materialize_operator(g, model.alpha, OperatorKind::d2);
  const auto u = smooth_state(g);
  const double horizon = 0.5;
  const auto ref = testing::rk4(d2, u.values, model.lambda, model.sigma, 1e-4, 5000);
  const std::vector<double> dW(g.n, 0.0);
  const FractionalOperators ops(g, model.alpha);
  std::vector<double> errs;
  for (int steps : {10, 20, 40}) {
    const SchemeParams scheme{.dt = horizon / steps, .fp_tol = 1e-14};
    ComplexField s = u;
    for (int n = 0; n < steps; ++n) s = midpoint_step(s, dW, model, scheme, ops);
    errs.push_back(max_abs_diff(s.values, ref));
  }
  for (std::size_t i = 1; i < errs.size(); ++i) {
    EXPECT_GE(std::log2(errs[i - 1] / errs[i]), 1.9);
  }
}

TEST(Midpoint, FixedPointsAndZeroStep) {
  std::mt19937_64 rng(4);
  const auto g = build_grid(-20.0, 20.0, 32);
  const ModelParams model{};
  const FractionalOperators ops(g, model.alpha);
  const auto dW = random_noise(g.n, rng, 0.1);
  const ComplexField zero(g.n);
  for (auto integ : {Integrator::midpoint, Integrator::splitting}) {
    SchemeParams scheme{.nonlinear_splitting = true};
    const auto out = step(integ, zero, dW, model, scheme, ops);
    EXPECT_EQ(testing::max_abs(out.values), 0.0) << to_string(integ);
    scheme.dt = 0.0;
    const auto u = random_field(g, rng);
    EXPECT_EQ(step(integ, u, dW, model, scheme, ops).values, u.values) << to_string(integ);
  }
}

TEST(Midpoint, NonConvergenceIsReported) {
  const auto g = build_grid(-20.0, 20.0, 32);
  const ModelParams model{.alpha = 0.6, .lambda = 1.0, .sigma = 1.0, .epsilon = 0.0};
  const SchemeParams scheme{.dt = 5.0, .fp_max_iter = 10};
  const auto u = sample_field(g, [](double) { return 3.0; });
  const std::vector<double> dW(g.n, 0.0);
  try {
    midpoint_step(u, dW, model, scheme, g);
    FAIL() << "expected NonConvergence";
  } catch (const NonConvergence& e) {
    EXPECT_LE(e.iterations(), 10);
    EXPECT_GT(e.residual(), scheme.fp_tol);
    EXPECT_EQ(e.step(), NonConvergence::kNoStep);
  }
}

TEST(Midpoint, ShapeMismatch) {
  const auto g = build_grid(-20.0, 20.0, 32);
  const std::vector<double> dW(16, 0.0);
  EXPECT_THROW(midpoint_step(ComplexField(32), dW, ModelParams{}, SchemeParams{}, g), ShapeError);
  EXPECT_THROW(midpoint_step(ComplexField(16), std::vector<double>(32), ModelParams{},
                             SchemeParams{}, g),
               ShapeError);
}

TEST(Splitting, LinearCaseMatchesExactFlow) {
  std::mt19937_64 rng(5);
  const auto g = build_grid(-20.0, 20.0, 32);
  const ModelParams model{.alpha = 0.75, .lambda = 1.0, .sigma = 0.0, .epsilon = 0.0};
  const SchemeParams scheme{.dt = 0.01};
  const FractionalOperators ops(g, model.alpha);
  const auto u0 = random_field(g, rng);
  const std::vector<double> dW(g.n, 0.0);
  ComplexField u = u0;
  const int steps = 1000;
  for (int n = 0; n < steps; ++n) u = splitting_step(u, dW, model, scheme, ops);

  const double t = steps * scheme.dt;
  auto c = testing::naive_dft(u0.values, g);
  for (std::size_t slot = 0; slot < g.n; ++slot) {
    const double lam =
        std::pow(std::abs(static_cast<double>(signed_mode(slot, g.n)) * g.mu), 1.5);
    c[slot] *= std::polar(1.0, -t * (lam + model.lambda));
  }
  double worst = 0.0;
  for (std::size_t j = 0; j < g.n; ++j) {
    Complex s{};
    for (std::size_t slot = 0; slot < g.n; ++slot) {
      s += c[slot] * std::polar(1.0, static_cast<double>(signed_mode(slot, g.n)) * g.mu *
                                         (g.node(j) - g.a));
    }
    worst = std::max(worst, std::abs(s - u[j]));
  }
  EXPECT_LT(worst, 1e-12);
}

TEST(Splitting, PreservesModulusOfModesWithoutPotential) {
  std::mt19937_64 rng(6);
  const auto g = build_grid(-20.0, 20.0, 32);
  const ModelParams model{.alpha = 0.9, .lambda = 0.0, .sigma = 0.0, .epsilon = 0.0};
  const auto u = random_field(g, rng);
  const auto next = splitting_step(u, std::vector<double>(g.n), model, SchemeParams{}, g);
  const auto c0 = testing::naive_dft(u.values, g);
  const auto c1 = testing::naive_dft(next.values, g);
  for (std::size_t k = 0; k < g.n; ++k) EXPECT_NEAR(std::abs(c1[k]), std::abs(c0[k]), 1e-13);
}

TEST(Splitting, OneStepMassExact) {
  std::mt19937_64 rng(7);
  const auto g = build_grid(-20.0, 20.0, 64);
  const ModelParams model{.alpha = 0.75, .lambda = -1.0, .sigma = 0.0, .epsilon = 0.01};
  const auto u = random_field(g, rng);
  const auto dW = random_noise(g.n, rng, 0.1);
  const auto next = splitting_step(u, dW, model, SchemeParams{}, g);
  EXPECT_NEAR(mass(next, g), mass(u, g), 1e-13 * mass(u, g));
}

TEST(Splitting, NonlinearRequiresOptIn) {
  const auto g = build_grid(-20.0, 20.0, 32);
  const ModelParams model{.sigma = 1.0};
  const ComplexField u = sample_field(g, [](double x) { return 1.0 / std::cosh(x); });
  const std::vector<double> dW(g.n, 0.0);
  EXPECT_THROW(splitting_step(u, dW, model, SchemeParams{}, g), UnsupportedNonlinearity);
  const SchemeParams opt{.nonlinear_splitting = true};
  const auto next = splitting_step(u, dW, model, opt, g);
  EXPECT_NEAR(mass(next, g), mass(u, g), 1e-13);
}

TEST(Evolve, ZeroStepsReturnsInitialState) {
  const auto g = build_grid(-20.0, 20.0, 32);
  const ModelParams model{};
  const SchemeParams scheme{};
  const FractionalOperators ops(g, model.alpha);
  const auto noise = build_noise_model(4, g, model.epsilon);
  WienerPath path;
  path.dt = scheme.dt;
  path.k = 4;
  Observers obs;
  obs.diagnostics_stride = 1;
  obs.snapshot_stride = 1;
  const auto u = smooth_state(g);
  const auto traj = evolve(u, Integrator::midpoint, model, scheme, ops, noise, path, obs);
  EXPECT_EQ(traj.final_state.values, u.values);
  EXPECT_EQ(traj.diagnostics.size(), 1u);
  EXPECT_EQ(traj.snapshots.size(), 1u);
}

TEST(Evolve, SplittingMassOverLongRun) {
  const auto g = build_grid(-20.0, 20.0, 128);
  const ModelParams model{.alpha = 0.75, .lambda = -1.0, .sigma = 0.0, .epsilon = 0.5};
  const SchemeParams scheme{.dt = 0.01};
  const FractionalOperators ops(g, model.alpha);
  const auto noise = build_noise_model(20, g, model.epsilon);
  const auto path = sample_wiener_path(noise, 1000, scheme.dt, 8);
  const auto u = sample_field(g, [](double x) { return std::polar(1.0 / std::cosh(x), 2.0 * x); });
  Observers obs;
  obs.diagnostics_stride = 100;
  const auto traj = evolve(u, Integrator::splitting, model, scheme, ops, noise, path, obs);
  ASSERT_EQ(traj.diagnostics.size(), 11u);
  const double m0 = mass(u, g);
  for (const auto& r : traj.diagnostics) EXPECT_NEAR(r.mass, m0, 1e-12 * m0);
  EXPECT_NEAR(traj.diagnostics.back().time, 10.0, 1e-12);
  EXPECT_EQ(traj.final_state.time, 10.0);
}

TEST(Evolve, StridesAndCallback) {
  const auto g = build_grid(-20.0, 20.0, 32);
  const ModelParams model{};
  const SchemeParams scheme{};
  const FractionalOperators ops(g, model.alpha);
  const auto noise = build_noise_model(4, g, model.epsilon);
  const auto path = sample_wiener_path(noise, 10, scheme.dt, 2);
  std::vector<std::size_t> seen;
  const auto traj =
      evolve(smooth_state(g), Integrator::midpoint, model, scheme, ops, noise, path,
             Observers{.diagnostics_stride = 5,
                       .snapshot_stride = 3,
                       .on_step = [&](std::size_t n, const ComplexField&) { seen.push_back(n); }});
  EXPECT_EQ(traj.diagnostics.size(), 3u);  // 0, 5, 10
  EXPECT_EQ(traj.snapshots.size(), 4u);    // 0, 3, 6, 9
  EXPECT_EQ(seen.size(), 11u);
  EXPECT_NEAR(traj.snapshots[3].time, 0.09, 1e-15);
}

TEST(Evolve, ReportsFailingStep) {
  const auto g = build_grid(-20.0, 20.0, 32);
  const ModelParams model{.alpha = 0.6, .lambda = 1.0, .sigma = 1.0, .epsilon = 0.0};
  const SchemeParams scheme{.dt = 5.0, .fp_max_iter = 5};
  const FractionalOperators ops(g, model.alpha);
  const auto noise = build_noise_model(1, g, 0.0);
  const auto path = sample_wiener_path(noise, 3, scheme.dt, 1);
  try {
    evolve(sample_field(g, [](double) { return 3.0; }), Integrator::midpoint, model, scheme, ops,
           noise, path);
    FAIL() << "expected NonConvergence";
  } catch (const NonConvergence& e) {
    EXPECT_EQ(e.step(), 0u);
  }
}

TEST(Evolve, RejectsMismatchedInputs) {
  const auto g = build_grid(-20.0, 20.0, 32);
  const ModelParams model{};
  const FractionalOperators ops(g, 0.9);
  const auto noise = build_noise_model(1, g, 0.0);
  const auto path = sample_wiener_path(noise, 3, 0.01, 1);
  EXPECT_THROW(evolve(ComplexField(32), Integrator::midpoint, model, SchemeParams{}, ops, noise,
                      path),
               DomainError);
  const FractionalOperators ok(g, model.alpha);
  EXPECT_THROW(evolve(ComplexField(32), Integrator::midpoint, model, SchemeParams{.dt = 0.02}, ok,
                      noise, path),
               DomainError);
}

}  // namespace
}  // namespace sfnse
