#pragma once

// Fast operator and structure checks behind `sfnse selftest`.

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "sfnse/diagnostics.hpp"
#include "sfnse/dynamics.hpp"
#include "sfnse/noise.hpp"
#include "sfnse/spectral.hpp"

namespace sfnse {

struct SelfTestResult {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double bound = 0.0;
};

namespace detail {

inline ComplexField random_field(const GridSpec& grid, std::mt19937_64& rng,
                                 double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  ComplexField f(grid.n);
  for (auto& v : f.values) v = Complex(nd(rng), nd(rng));
  return f;
}

}  // namespace detail

inline std::vector<SelfTestResult> run_selftest() {
  std::vector<SelfTestResult> out;
  auto check = [&](std::string name, double measured, double bound) {
    out.push_back({std::move(name), measured <= bound, measured, bound});
  };
  std::mt19937_64 rng(7);

  {
    const GridSpec g = build_grid(0.0, 2.0 * std::numbers::pi, 16);
    double worst = 0.0;
    for (double alpha : {0.5, 0.6, 0.75, 0.9, 1.0}) {
      const FractionalOperators ops(g, alpha);
      for (long k = -7; k <= 7; ++k) {
        const ComplexField e = sample_field(g, [&](double x) {
          return std::polar(1.0, static_cast<double>(k) * g.mu * (x - g.a));
        });
        const ComplexField le = ops.frac_laplacian(e);
        const double lam = std::pow(std::abs(static_cast<double>(k) * g.mu), 2.0 * alpha);
        for (std::size_t j = 0; j < g.n; ++j)
          worst = std::max(worst, std::abs(le[j] - lam * e[j]) / std::max(1.0, lam));
      }
    }
    check("eigenmode identity |k mu|^{2 alpha}", worst, 1e-12);
  }

  {
    double worst = 0.0;
    for (std::size_t n : {8u, 16u, 32u}) {
      const GridSpec g = build_grid(-20.0, 20.0, n);
      const auto d1 = materialize_operator(g, 0.75, OperatorKind::d1);
      const auto d2 = materialize_operator(g, 0.75, OperatorKind::d2);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          worst = std::max(worst, std::abs(d1(i, j) + d1(j, i)));
          worst = std::max(worst, std::abs(d2(i, j) - d2(j, i)));
        }
    }
    check("D1 skew-symmetric, D2 symmetric", worst, 1e-13);
  }

  {
    const GridSpec g = build_grid(0.0, 10.0, 32);
    const FractionalOperators ops(g, 0.6);
    ComplexField u = detail::random_field(g, rng);
    auto c = transform(u, g, Direction::forward);
    c[g.n / 2] = 0.0;
    u.values = transform(c, g, Direction::inverse);
    const auto gg = ops.g_operator(ops.g_operator(u));
    const auto lu = ops.frac_laplacian(u);
    double worst = 0.0;
    for (std::size_t j = 0; j < g.n; ++j) worst = std::max(worst, std::abs(gg[j] + lu[j]));
    check("G^2 = -(-Delta)^alpha on Nyquist-free fields", worst, 1e-12);
  }

  {
    const GridSpec g = build_grid(-20.0, 20.0, 400);
    double worst = 0.0;
    for (double alpha : {0.6, 0.9}) {
      for (double lam : make_symbols(g, alpha).lap_symbol) {
        const Complex f = Complex(2.0, -0.01 * lam) / Complex(2.0, 0.01 * lam);
        worst = std::max(worst, std::abs(std::abs(f) - 1.0));
      }
    }
    check("Cayley factor unimodular", worst, 1e-14);
  }

  {
    const GridSpec g = build_grid(0.0, 40.0, 64);
    const ModelParams model{0.75, -1.0, 0.0, 0.01};
    const SchemeParams scheme{0.01};
    const FractionalOperators ops(g, model.alpha);
    const NoiseModel noise = build_noise_model(10, g, model.epsilon);
    const WienerPath path = sample_wiener_path(noise, 1000, scheme.dt, 11);
    ComplexField u = detail::random_field(g, rng);
    const double m0 = mass(u, g, MassMode::squared);
    double worst = 0.0;
    Observers obs;
    obs.on_step = [&](std::size_t, const ComplexField& s) {
      worst = std::max(worst, std::abs(mass(s, g, MassMode::squared) - m0) / m0);
    };
    evolve(u, Integrator::splitting, model, scheme, ops, noise, path, obs);
    check("splitting mass drift (relative, 1000 steps)", worst, 1e-12);
  }

  {
    const GridSpec g = build_grid(-4.0, 4.0, 8);
    double worst = 0.0;
    for (int draw = 0; draw < 4; ++draw) {
      const ModelParams model{draw % 2 ? 0.9 : 0.6, -1.0, static_cast<double>(draw / 2), 0.0};
      SchemeParams scheme{0.01, 1e-14, 100};
      const FractionalOperators ops(g, model.alpha);
      const ComplexField u = detail::random_field(g, rng, 0.5);
      std::vector<double> dW(g.n);
      std::normal_distribution<double> nd(0.0, 0.01);
      for (auto& w : dW) w = nd(rng);
      worst = std::max(worst, symplectic_defect(
                                  [&](const ComplexField& s) {
                                    return midpoint_step(s, dW, model, scheme, ops);
                                  },
                                  u, 1e-6));
    }
    check("midpoint symplecticity defect (N=8)", worst, 1e-5);
  }

  {
    const WienerPath p = sample_wiener_path(3, 64, 1e-3, 5);
    const WienerPath a = coarsen_path(coarsen_path(p, 2), 2);
    const WienerPath b = coarsen_path(p, 4);
    double worst = 0.0;
    for (std::size_t i = 0; i < a.increments.size(); ++i)
      worst = std::max(worst, std::abs(a.increments[i] - b.increments[i]));
    check("path coarsening exact", worst, 0.0);
  }
  return out;
}

}  // namespace sfnse
