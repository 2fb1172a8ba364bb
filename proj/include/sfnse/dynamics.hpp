#pragma once

// Time integrators for
//   i du = [(-Delta)^alpha u + lambda |u|^{2 sigma} u] dt + u o dW
// and the trajectory driver.
//
// midpoint_step:  implicit stochastic midpoint rule (symplectic, mass
//                 conserving), solved by a preconditioned fixed-point loop.
// splitting_step: explicit Lie splitting of the linear spectral flow and the
//                 pointwise phase flow of the potential and noise terms.

#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sfnse/diagnostics.hpp"
#include "sfnse/errors.hpp"
#include "sfnse/noise.hpp"
#include "sfnse/params.hpp"
#include "sfnse/spectral.hpp"

namespace sfnse {

enum class Integrator { midpoint, splitting };

inline const char* to_string(Integrator i) {
  return i == Integrator::midpoint ? "midpoint" : "splitting";
}

namespace detail {

inline double nonlinear_weight(const Complex& v, double sigma) {
  if (sigma == 0.0) return 1.0;
  const double r2 = std::norm(v);
  return sigma == 1.0 ? r2 : std::pow(r2, sigma);
}

inline double discrete_norm(std::span<const Complex> a, std::span<const Complex> b,
                            double h) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += std::norm(a[j] - b[j]);
  return std::sqrt(h * s);
}

}  // namespace detail

/// Residual of the dt-scaled midpoint relation
///   i (next - prev) - dt (L psi + lambda |psi|^{2 sigma} psi) - psi dW,
/// psi = (prev + next) / 2, in the discrete l2 norm.
inline double midpoint_residual(const ComplexField& prev, const ComplexField& next,
                                std::span<const double> dW,
                                const ModelParams& model, double dt,
                                const FractionalOperators& ops) {
  const std::size_t n = ops.grid().n;
  check_length(prev.size(), n, "midpoint_residual");
  check_length(next.size(), n, "midpoint_residual");
  check_length(dW.size(), n, "midpoint_residual noise");
  std::vector<Complex> psi(n), lpsi(n), scratch(n), r(n);
  for (std::size_t j = 0; j < n; ++j) psi[j] = 0.5 * (prev[j] + next[j]);
  ops.frac_laplacian(psi, lpsi, scratch);
  const Complex i1(0.0, 1.0);
  for (std::size_t j = 0; j < n; ++j) {
    const double w = detail::nonlinear_weight(psi[j], model.sigma);
    r[j] = i1 * (next[j] - prev[j]) -
           dt * (lpsi[j] + model.lambda * w * psi[j]) - psi[j] * dW[j];
  }
  double s = 0.0;
  for (const auto& v : r) s += std::norm(v);
  return std::sqrt(ops.grid().h * s);
}

/// One step of the stochastic midpoint rule. The midpoint value psi solves
///   (2 + i dt L) psi = 2 phi^n - i dt lambda |psi|^{2 sigma} psi - i psi dW
/// by fixed-point iteration with the linear part inverted per Fourier mode,
/// starting from psi = phi^n; then phi^{n+1} = 2 psi - phi^n.
inline ComplexField midpoint_step(const ComplexField& state,
                                  std::span<const double> dW,
                                  const ModelParams& model,
                                  const SchemeParams& scheme,
                                  const FractionalOperators& ops) {
  const GridSpec& grid = ops.grid();
  check_length(state.size(), grid.n, "midpoint_step state");
  check_length(dW.size(), grid.n, "midpoint_step noise");
  if (scheme.dt == 0.0) return state;

  const std::size_t n = grid.n;
  const double dt = scheme.dt;
  const Complex i1(0.0, 1.0);
  const auto& lap = ops.symbols().lap_symbol;
  std::vector<Complex> inv_denominator(n);
  for (std::size_t k = 0; k < n; ++k) {
    inv_denominator[k] = 1.0 / Complex(2.0, dt * lap[k]);
  }

  bool linear = model.lambda == 0.0;
  for (double w : dW) linear = linear && w == 0.0;

  std::vector<Complex> psi = state.values;
  std::vector<Complex> rhs(n), next(n), scratch(n);
  double update = 0.0;
  int iter = 0;
  for (;;) {
    ++iter;
    for (std::size_t j = 0; j < n; ++j) {
      const double w = detail::nonlinear_weight(psi[j], model.sigma);
      rhs[j] = 2.0 * state[j] - i1 * (dt * model.lambda * w + dW[j]) * psi[j];
    }
    ops.apply_multiplier(rhs, next, scratch,
                         [&](std::size_t k) { return inv_denominator[k]; });
    update = detail::discrete_norm(next, psi, grid.h);
    psi.swap(next);
    if (linear || update <= scheme.fp_tol) break;
    if (!std::isfinite(update) || iter >= scheme.fp_max_iter) {
      throw NonConvergence(iter, update);
    }
  }

  ComplexField out(n, state.time + dt);
  for (std::size_t j = 0; j < n; ++j) out[j] = 2.0 * psi[j] - state[j];
  return out;
}

inline ComplexField midpoint_step(const ComplexField& state,
                                  std::span<const double> dW,
                                  const ModelParams& model,
                                  const SchemeParams& scheme,
                                  const GridSpec& grid) {
  return midpoint_step(state, dW, model, scheme,
                       FractionalOperators(grid, model.alpha));
}

/// u_n = exp(-i dt L) [exp(-i dt lambda |u|^{2 sigma} - i dW) u_{n-1}].
/// sigma > 0 requires scheme.nonlinear_splitting (experimental: the phase flow
/// is still exact because |u| is invariant along it).
inline ComplexField splitting_step(const ComplexField& state,
                                   std::span<const double> dW,
                                   const ModelParams& model,
                                   const SchemeParams& scheme,
                                   const FractionalOperators& ops) {
  const GridSpec& grid = ops.grid();
  check_length(state.size(), grid.n, "splitting_step state");
  check_length(dW.size(), grid.n, "splitting_step noise");
  if (model.sigma != 0.0 && !scheme.nonlinear_splitting) {
    throw UnsupportedNonlinearity(
        "splitting scheme is defined for sigma = 0; enable "
        "scheme.nonlinear_splitting for the experimental sigma > 0 variant");
  }
  if (scheme.dt == 0.0) return state;

  const std::size_t n = grid.n;
  const double dt = scheme.dt;
  std::vector<Complex> phased(n), scratch(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double w = detail::nonlinear_weight(state[j], model.sigma);
    phased[j] = state[j] * std::polar(1.0, -dt * model.lambda * w - dW[j]);
  }
  const auto& lap = ops.symbols().lap_symbol;
  ComplexField out(n, state.time + dt);
  ops.apply_multiplier(phased, out.values, scratch, [&](std::size_t k) {
    return std::polar(1.0, -dt * lap[k]);
  });
  return out;
}

inline ComplexField splitting_step(const ComplexField& state,
                                   std::span<const double> dW,
                                   const ModelParams& model,
                                   const SchemeParams& scheme,
                                   const GridSpec& grid) {
  return splitting_step(state, dW, model, scheme,
                        FractionalOperators(grid, model.alpha));
}

inline ComplexField step(Integrator integrator, const ComplexField& state,
                         std::span<const double> dW, const ModelParams& model,
                         const SchemeParams& scheme,
                         const FractionalOperators& ops) {
  return integrator == Integrator::midpoint
             ? midpoint_step(state, dW, model, scheme, ops)
             : splitting_step(state, dW, model, scheme, ops);
}

/// What evolve() records along the way. A stride of 0 disables that record;
/// otherwise step n is recorded when n % stride == 0 (n = 0 included).
struct Observers {
  std::size_t diagnostics_stride = 0;
  MassMode mass_mode = MassMode::norm;
  std::size_t snapshot_stride = 0;
  std::function<void(std::size_t, const ComplexField&)> on_step;
};

struct Trajectory {
  ComplexField final_state;
  std::vector<DiagnosticsRecord> diagnostics;
  std::vector<ComplexField> snapshots;
};

/// Applies `integrator` once per row of `path`, driving the noise through
/// `noise`. NonConvergence is rethrown with the failing step index.
inline Trajectory evolve(const ComplexField& initial, Integrator integrator,
                         const ModelParams& model, const SchemeParams& scheme,
                         const FractionalOperators& ops, const NoiseModel& noise,
                         const WienerPath& path, const Observers& observers = {}) {
  const GridSpec& grid = ops.grid();
  check_length(initial.size(), grid.n, "evolve initial state");
  if (ops.alpha() != model.alpha) {
    throw DomainError("operator alpha does not match model alpha");
  }
  if (std::abs(path.dt - scheme.dt) > 1e-12 * std::max(path.dt, scheme.dt)) {
    throw DomainError("path spacing dt=" + std::to_string(path.dt) +
                      " differs from scheme dt=" + std::to_string(scheme.dt));
  }

  Trajectory out;
  auto record = [&](std::size_t n, const ComplexField& s) {
    if (observers.diagnostics_stride != 0 && n % observers.diagnostics_stride == 0) {
      out.diagnostics.push_back(observe(s, ops, model, observers.mass_mode));
    }
    if (observers.snapshot_stride != 0 && n % observers.snapshot_stride == 0) {
      out.snapshots.push_back(s);
    }
    if (observers.on_step) observers.on_step(n, s);
  };

  ComplexField state = initial;
  record(0, state);
  std::vector<double> dW(grid.n);
  for (std::size_t n = 0; n < path.steps; ++n) {
    increment_field(path, n, noise, dW);
    try {
      state = step(integrator, state, dW, model, scheme, ops);
    } catch (const NonConvergence& e) {
      throw e.at_step(n);
    }
    // Accumulated time drifts; pin it to the step grid.
    state.time = initial.time + static_cast<double>(n + 1) * scheme.dt;
    record(n + 1, state);
  }
  out.final_state = std::move(state);
  return out;
}

}  // namespace sfnse
