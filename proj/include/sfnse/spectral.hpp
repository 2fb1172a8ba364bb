#pragma once

// Periodic grids, discrete Fourier transforms and the pseudospectral
// fractional operators (-Delta)^alpha and its skew-adjoint square root G.
//
// Mode storage follows the usual DFT ordering k = 0..N/2-1, -N/2..-1. The
// symmetric range -N/2..N/2 with Nyquist weight c_k = 2 appears
// only in the dense element formulas of materialize_operator().

#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <fftw3.h>

#include "sfnse/errors.hpp"

namespace sfnse {

using Complex = std::complex<double>;

/// Periodic grid [a, b) with N nodes x_j = a + j h.
struct GridSpec {
  double a = 0.0;
  double b = 0.0;
  std::size_t n = 0;
  double h = 0.0;   // (b - a) / N
  double mu = 0.0;  // 2 pi / (b - a)

  double length() const noexcept { return b - a; }
  double node(std::size_t j) const noexcept {
    return a + static_cast<double>(j) * h;
  }
  std::vector<double> nodes() const {
    std::vector<double> x(n);
    for (std::size_t j = 0; j < n; ++j) x[j] = node(j);
    return x;
  }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

inline GridSpec build_grid(double a, double b, std::size_t n) {
  if (!(b > a) || !std::isfinite(a) || !std::isfinite(b)) {
    throw DomainError("grid requires finite a < b");
  }
  if (n < 4 || n % 2 != 0) {
    throw DomainError("grid size N must be even and >= 4, got " +
                      std::to_string(n));
  }
  GridSpec g;
  g.a = a;
  g.b = b;
  g.n = n;
  g.h = (b - a) / static_cast<double>(n);
  g.mu = 2.0 * std::numbers::pi / (b - a);
  return g;
}

/// Complex samples u_j ~ u(x_j, t).
struct ComplexField {
  std::vector<Complex> values;
  double time = 0.0;

  ComplexField() = default;
  explicit ComplexField(std::size_t n, double t = 0.0) : values(n), time(t) {}
  ComplexField(std::vector<Complex> v, double t) : values(std::move(v)), time(t) {}

  std::size_t size() const noexcept { return values.size(); }
  Complex& operator[](std::size_t j) { return values[j]; }
  const Complex& operator[](std::size_t j) const { return values[j]; }

  friend bool operator==(const ComplexField&, const ComplexField&) = default;
};

/// Samples f(x_j) on the grid.
template <class F>
ComplexField sample_field(const GridSpec& grid, F&& f, double time = 0.0) {
  ComplexField out(grid.n, time);
  for (std::size_t j = 0; j < grid.n; ++j) out[j] = Complex(f(grid.node(j)));
  return out;
}

/// Signed wavenumber index of DFT slot `slot` (k = -N/2 at the Nyquist slot).
inline long signed_mode(std::size_t slot, std::size_t n) noexcept {
  const auto s = static_cast<long>(slot);
  const auto nn = static_cast<long>(n);
  return s < nn / 2 ? s : s - nn;
}

inline void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw DomainError("alpha must lie in (0, 1], got " + std::to_string(alpha));
  }
}

inline void check_length(std::size_t got, std::size_t expected,
                         const char* what) {
  if (got != expected) {
    throw ShapeError(std::string(what) + ": length " + std::to_string(got) +
                     " does not match grid size " + std::to_string(expected));
  }
}

namespace detail {

// FFTW plans are created once per size and shared. Planning is serialized;
// execution goes through the new-array interface, which FFTW documents as
// thread-safe. FFTW_ESTIMATE keeps the algorithm choice deterministic.
class FftPlans {
 public:
  explicit FftPlans(std::size_t n) : n_(n) {
    std::vector<Complex> in(n), out(n);
    auto* pin = reinterpret_cast<fftw_complex*>(in.data());
    auto* pout = reinterpret_cast<fftw_complex*>(out.data());
    const int nn = static_cast<int>(n);
    constexpr unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    forward_ = fftw_plan_dft_1d(nn, pin, pout, FFTW_FORWARD, flags);
    backward_ = fftw_plan_dft_1d(nn, pin, pout, FFTW_BACKWARD, flags);
    if (forward_ == nullptr || backward_ == nullptr) {
      throw Error("FFTW failed to create plans for N=" + std::to_string(n));
    }
  }
  ~FftPlans() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }
  FftPlans(const FftPlans&) = delete;
  FftPlans& operator=(const FftPlans&) = delete;

  std::size_t size() const noexcept { return n_; }

  // Unnormalized e^{-i...} transform.
  void forward(const Complex* in, Complex* out) const {
    fftw_execute_dft(forward_,
                     reinterpret_cast<fftw_complex*>(const_cast<Complex*>(in)),
                     reinterpret_cast<fftw_complex*>(out));
  }
  // Unnormalized e^{+i...} transform.
  void backward(const Complex* in, Complex* out) const {
    fftw_execute_dft(backward_,
                     reinterpret_cast<fftw_complex*>(const_cast<Complex*>(in)),
                     reinterpret_cast<fftw_complex*>(out));
  }

  static std::shared_ptr<const FftPlans> get(std::size_t n) {
    std::lock_guard lock(planner_mutex());
    static std::map<std::size_t, std::weak_ptr<const FftPlans>> cache;
    if (auto hit = cache[n].lock()) return hit;
    auto plans = std::make_shared<const FftPlans>(n);
    cache[n] = plans;
    return plans;
  }

  static std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
  }

 private:
  std::size_t n_;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

}  // namespace detail

/// Normalized DFT pair on an N-point grid: forward carries the 1/N factor so
/// that coefficients are the interpolation coefficients of the samples.
class Fft {
 public:
  explicit Fft(std::size_t n) : plans_(detail::FftPlans::get(n)) {}

  std::size_t size() const noexcept { return plans_->size(); }

  /// out_k = (1/N) sum_j in_j e^{-2 pi i j k / N}.
  void forward(std::span<const Complex> in, std::span<Complex> out) const {
    check(in.size(), out.size());
    plans_->forward(in.data(), out.data());
    const double scale = 1.0 / static_cast<double>(size());
    for (auto& c : out) c *= scale;
  }

  /// Exact inverse of forward().
  void inverse(std::span<const Complex> in, std::span<Complex> out) const {
    check(in.size(), out.size());
    plans_->backward(in.data(), out.data());
  }

 private:
  void check(std::size_t in, std::size_t out) const {
    check_length(in, size(), "fft input");
    check_length(out, size(), "fft output");
  }

  std::shared_ptr<const detail::FftPlans> plans_;
};

enum class Direction { forward, inverse };

/// Forward: u~_k = (1/N) sum_j u_j e^{-i k mu (x_j - a)}, DFT ordering.
/// Inverse: u_j = sum_k u~_k e^{i k mu (x_j - a)}.
inline std::vector<Complex> transform(std::span<const Complex> values,
                                      const GridSpec& grid, Direction dir) {
  check_length(values.size(), grid.n, "transform");
  std::vector<Complex> out(grid.n);
  Fft fft(grid.n);
  if (dir == Direction::forward) {
    fft.forward(values, out);
  } else {
    fft.inverse(values, out);
  }
  return out;
}

inline std::vector<Complex> transform(const ComplexField& field,
                                      const GridSpec& grid, Direction dir) {
  return transform(std::span<const Complex>(field.values), grid, dir);
}

/// Per-mode multipliers of the discretized operators, DFT ordering.
struct OperatorSymbols {
  double alpha = 1.0;
  std::vector<double> lap_symbol;  // |k mu|^{2 alpha}
  std::vector<Complex> g_symbol;   // i k mu |k mu|^{alpha - 1}, 0 at Nyquist
};

/// The Nyquist entry of g_symbol is the c_k = 2 weighted sum of the +N/2 and
/// -N/2 symbols, which cancel; lap_symbol keeps the full value there.
inline OperatorSymbols make_symbols(const GridSpec& grid, double alpha) {
  check_alpha(alpha);
  OperatorSymbols s;
  s.alpha = alpha;
  s.lap_symbol.assign(grid.n, 0.0);
  s.g_symbol.assign(grid.n, Complex{});
  const std::size_t nyquist = grid.n / 2;
  for (std::size_t slot = 0; slot < grid.n; ++slot) {
    const long k = signed_mode(slot, grid.n);
    if (k == 0) continue;
    const double xi = static_cast<double>(k) * grid.mu;
    const double mag = std::abs(xi);
    s.lap_symbol[slot] = std::pow(mag, 2.0 * alpha);
    if (slot != nyquist) {
      s.g_symbol[slot] = Complex(0.0, xi * std::pow(mag, alpha - 1.0));
    }
  }
  return s;
}

/// Cached grid + symbols + FFT plans for repeated operator application.
/// Immutable after construction; share freely between threads.
class FractionalOperators {
 public:
  FractionalOperators(const GridSpec& grid, double alpha)
      : grid_(grid), symbols_(make_symbols(grid, alpha)), fft_(grid.n) {}

  const GridSpec& grid() const noexcept { return grid_; }
  const OperatorSymbols& symbols() const noexcept { return symbols_; }
  double alpha() const noexcept { return symbols_.alpha; }
  const Fft& fft() const noexcept { return fft_; }

  /// Multiplies the spectrum of `in` by `symbol(slot)` and writes to `out`.
  /// `scratch` must have N entries; `in` and `out` may alias.
  template <class Symbol>
  void apply_multiplier(std::span<const Complex> in, std::span<Complex> out,
                        std::span<Complex> scratch, Symbol&& symbol) const {
    check_length(in.size(), grid_.n, "operator input");
    fft_.forward(in, scratch);
    for (std::size_t k = 0; k < grid_.n; ++k) scratch[k] *= symbol(k);
    fft_.inverse(scratch, out);
  }

  void frac_laplacian(std::span<const Complex> in, std::span<Complex> out,
                      std::span<Complex> scratch) const {
    apply_multiplier(in, out, scratch,
                     [&](std::size_t k) { return symbols_.lap_symbol[k]; });
  }

  void g_operator(std::span<const Complex> in, std::span<Complex> out,
                  std::span<Complex> scratch) const {
    apply_multiplier(in, out, scratch,
                     [&](std::size_t k) { return symbols_.g_symbol[k]; });
  }

  ComplexField frac_laplacian(const ComplexField& field) const {
    ComplexField out(grid_.n, field.time);
    std::vector<Complex> scratch(grid_.n);
    frac_laplacian(field.values, out.values, scratch);
    return out;
  }

  ComplexField g_operator(const ComplexField& field) const {
    ComplexField out(grid_.n, field.time);
    std::vector<Complex> scratch(grid_.n);
    g_operator(field.values, out.values, scratch);
    return out;
  }

 private:
  GridSpec grid_;
  OperatorSymbols symbols_;
  Fft fft_;
};

/// Applies the positive operator (-Delta)^alpha (symbol +|k mu|^{2 alpha}).
inline ComplexField apply_frac_laplacian(const ComplexField& field,
                                         const GridSpec& grid, double alpha) {
  check_length(field.size(), grid.n, "apply_frac_laplacian");
  return FractionalOperators(grid, alpha).frac_laplacian(field);
}

/// Applies G, the skew-adjoint operator with G^2 = -(-Delta)^alpha away from
/// the Nyquist mode.
inline ComplexField apply_g_operator(const ComplexField& field,
                                     const GridSpec& grid, double alpha) {
  check_length(field.size(), grid.n, "apply_g_operator");
  return FractionalOperators(grid, alpha).g_operator(field);
}

/// Row-major dense real matrix.
struct DenseMatrix {
  std::size_t n = 0;
  std::vector<double> data;

  DenseMatrix() = default;
  explicit DenseMatrix(std::size_t size) : n(size), data(size * size, 0.0) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * n + j]; }
  double operator()(std::size_t i, std::size_t j) const {
    return data[i * n + j];
  }

  DenseMatrix transpose() const {
    DenseMatrix t(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  friend DenseMatrix operator*(const DenseMatrix& x, const DenseMatrix& y) {
    DenseMatrix r(x.n);
    for (std::size_t i = 0; i < x.n; ++i)
      for (std::size_t k = 0; k < x.n; ++k) {
        const double xik = x(i, k);
        for (std::size_t j = 0; j < x.n; ++j) r(i, j) += xik * y(k, j);
      }
    return r;
  }

  template <class T>
  std::vector<T> apply(std::span<const T> v) const {
    std::vector<T> out(n, T{});
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) out[i] += (*this)(i, j) * v[j];
    return out;
  }
};

enum class OperatorKind { d1, d2 };

inline constexpr std::size_t kMaxDenseSize = 256;

/// Dense matrices of the discretized operators built from the element formula
///   (D)_{j,l} = sum_{k=-N/2}^{N/2} 1/(N c_k) s(k) e^{i k mu (x_j - x_l)}
/// with c_{+-N/2} = 2. D1 uses s(k) = i k mu |k mu|^{alpha-1} (skew-symmetric);
/// D2 uses s(k) = |k mu|^{2 alpha}, i.e. the positive operator (symmetric).
inline DenseMatrix materialize_operator(const GridSpec& grid, double alpha,
                                        OperatorKind which) {
  check_alpha(alpha);
  if (grid.n > kMaxDenseSize) {
    throw SizeError("materialize_operator is limited to N <= " +
                    std::to_string(kMaxDenseSize));
  }
  const long half = static_cast<long>(grid.n / 2);
  const double inv_n = 1.0 / static_cast<double>(grid.n);
  DenseMatrix m(grid.n);
  for (std::size_t j = 0; j < grid.n; ++j) {
    for (std::size_t l = 0; l < grid.n; ++l) {
      const double dx = (static_cast<double>(j) - static_cast<double>(l)) * grid.h;
      Complex sum{};
      for (long k = -half; k <= half; ++k) {
        if (k == 0) continue;
        const double xi = static_cast<double>(k) * grid.mu;
        const double mag = std::abs(xi);
        const double weight = (k == half || k == -half) ? 0.5 * inv_n : inv_n;
        const Complex s = which == OperatorKind::d1
                              ? Complex(0.0, xi * std::pow(mag, alpha - 1.0))
                              : Complex(std::pow(mag, 2.0 * alpha), 0.0);
        sum += weight * s * std::polar(1.0, xi * dx);
      }
      m(j, l) = sum.real();
    }
  }
  return m;
}

}  // namespace sfnse
