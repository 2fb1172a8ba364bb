#pragma once

// Conserved quantities, error norms and the finite-difference symplecticity
// check.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "sfnse/errors.hpp"
#include "sfnse/params.hpp"
#include "sfnse/spectral.hpp"

namespace sfnse {

enum class MassMode { squared, norm };

struct DiagnosticsRecord {
  double time = 0.0;
  double mass = 0.0;
  double energy = 0.0;
  double max_amplitude = 0.0;

  friend bool operator==(const DiagnosticsRecord&, const DiagnosticsRecord&) = default;
};

/// h * sum_j |u_j|^2, or its square root.
inline double mass(std::span<const Complex> u, const GridSpec& grid,
                   MassMode mode = MassMode::norm) {
  double s = 0.0;
  for (const auto& v : u) s += std::norm(v);
  s *= grid.h;
  return mode == MassMode::norm ? std::sqrt(s) : s;
}

inline double mass(const ComplexField& state, const GridSpec& grid,
                   MassMode mode = MassMode::norm) {
  return mass(std::span<const Complex>(state.values), grid, mode);
}

/// H = (b-a)/2 sum_k |k mu|^{2 alpha} |u~_k|^2 + lambda/(2 sigma + 2) h sum_j |u_j|^{2 sigma + 2}.
inline double energy(std::span<const Complex> u, const FractionalOperators& ops,
                     const ModelParams& model) {
  const auto& grid = ops.grid();
  check_length(u.size(), grid.n, "energy");
  std::vector<Complex> coeffs(grid.n);
  ops.fft().forward(u, coeffs);
  const auto& lap = ops.symbols().lap_symbol;
  double kinetic = 0.0;
  for (std::size_t k = 0; k < grid.n; ++k) kinetic += lap[k] * std::norm(coeffs[k]);
  kinetic *= 0.5 * grid.length();

  double potential = 0.0;
  if (model.lambda != 0.0) {
    const double p = model.sigma + 1.0;
    for (const auto& v : u) potential += std::pow(std::norm(v), p);
    potential *= model.lambda / (2.0 * model.sigma + 2.0) * grid.h;
  }
  return kinetic + potential;
}

inline double energy(const ComplexField& state, const GridSpec& grid,
                     const ModelParams& model) {
  return energy(state.values, FractionalOperators(grid, model.alpha), model);
}

inline double max_amplitude(std::span<const Complex> u) {
  double m = 0.0;
  for (const auto& v : u) m = std::max(m, std::abs(v));
  return m;
}

/// sqrt(h * sum_j |a_j - b_j|^2).
inline double l2_error(const ComplexField& a, const ComplexField& b,
                       const GridSpec& grid) {
  if (a.size() != b.size()) {
    throw ShapeError("l2_error: lengths " + std::to_string(a.size()) + " and " +
                     std::to_string(b.size()) + " differ");
  }
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += std::norm(a[j] - b[j]);
  return std::sqrt(grid.h * s);
}

inline DiagnosticsRecord observe(const ComplexField& state,
                                 const FractionalOperators& ops,
                                 const ModelParams& model,
                                 MassMode mode = MassMode::norm) {
  return {state.time, mass(state, ops.grid(), mode),
          energy(state.values, ops, model), max_amplitude(state.values)};
}

inline constexpr std::size_t kMaxSymplecticSize = 32;

/// Finite-difference symplecticity defect of a one-step map.
///
/// The map acts on z = (p_0..p_{N-1}, q_0..q_{N-1}) with u = p + i q. Its
/// Jacobian J is built column by column from central differences with step
/// fd_eps, and the result is the induced infinity norm of J^T Omega J - Omega
/// with Omega = [[0, I], [-I, 0]]. Any noise increment must be frozen inside
/// `step`.
template <class Stepper>
double symplectic_defect(Stepper&& step, const ComplexField& state,
                         double fd_eps = 1e-6) {
  const std::size_t n = state.size();
  if (n == 0 || n > kMaxSymplecticSize) {
    throw SizeError("symplectic_defect supports 1 <= N <= " +
                    std::to_string(kMaxSymplecticSize));
  }
  if (!(fd_eps > 0.0)) throw DomainError("fd_eps must be > 0");
  const std::size_t dim = 2 * n;
  std::vector<double> jac(dim * dim);  // row-major, jac[r * dim + c]

  for (std::size_t c = 0; c < dim; ++c) {
    const Complex dz = c < n ? Complex(fd_eps, 0.0) : Complex(0.0, fd_eps);
    const std::size_t node = c % n;
    ComplexField plus = state;
    ComplexField minus = state;
    plus[node] += dz;
    minus[node] -= dz;
    // Divide by the step actually represented, not 2 * fd_eps.
    const Complex spread = plus[node] - minus[node];
    const double width = c < n ? spread.real() : spread.imag();
    const ComplexField fp = step(plus);
    const ComplexField fm = step(minus);
    for (std::size_t j = 0; j < n; ++j) {
      const Complex d = (fp[j] - fm[j]) / width;
      jac[j * dim + c] = d.real();
      jac[(j + n) * dim + c] = d.imag();
    }
  }

  // (J^T Omega J)_{rc} = sum_j (dp_j/dz_r dq_j/dz_c - dq_j/dz_r dp_j/dz_c)
  double worst = 0.0;
  for (std::size_t r = 0; r < dim; ++r) {
    double row_sum = 0.0;
    for (std::size_t c = 0; c < dim; ++c) {
      double v = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        v += jac[j * dim + r] * jac[(j + n) * dim + c] -
             jac[(j + n) * dim + r] * jac[j * dim + c];
      }
      double omega = 0.0;
      if (r < n && c == r + n) omega = 1.0;
      if (r >= n && c + n == r) omega = -1.0;
      row_sum += std::abs(v - omega);
    }
    worst = std::max(worst, row_sum);
  }
  return worst;
}

}  // namespace sfnse
