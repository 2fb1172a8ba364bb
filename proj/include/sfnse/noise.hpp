#pragma once

// Truncated real Q-Wiener process W(t, x) = sum_{l=1}^K phi_l(x) beta_l(t),
// its Brownian increments, and the coarse/fine path coupling used by the
// strong-convergence study.

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "sfnse/errors.hpp"
#include "sfnse/spectral.hpp"

namespace sfnse {

/// Stateless counter-based normal generator: every (seed, step, mode) triple
/// maps to one standard normal deviate, so any entry of a path can be
/// produced without generating its predecessors.
class CounterNormal {
 public:
  explicit CounterNormal(std::uint64_t seed) : seed_(seed) {}

  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Two independent 64-bit words for the counter (step, mode).
  std::pair<std::uint64_t, std::uint64_t> bits(std::uint64_t step,
                                               std::uint64_t mode) const noexcept {
    const std::uint64_t key = mix(mix(mix(seed_) ^ step) ^ (mode * 0xd1b54a32d192ed03ULL));
    return {mix(key ^ 0x1ULL), mix(key ^ 0x2ULL)};
  }

  double operator()(std::uint64_t step, std::uint64_t mode) const noexcept {
    const auto [w1, w2] = bits(step, mode);
    // (0, 1] and [0, 1) with 53-bit resolution.
    const double u1 = (static_cast<double>(w1 >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(w2 >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Derives an independent child seed, e.g. per Monte-Carlo path.
  static std::uint64_t derive(std::uint64_t master, std::uint64_t index) noexcept {
    return mix(mix(master ^ 0x5851f42d4c957f2dULL) + index);
  }

 private:
  std::uint64_t seed_;
};

struct NoiseModel {
  std::size_t k = 0;       // retained modes
  double epsilon = 0.0;    // amplitude applied in increment_field
  std::vector<std::vector<double>> mode_profiles;  // K x N samples of Phi e_l
  std::vector<double> f_phi;                        // sum_l (Phi e_l)^2
};

/// Samples of a_l sin(pi l x) with a_l = 1/l at the grid nodes (absolute x).
inline std::vector<std::vector<double>> sine_profiles(std::size_t k,
                                                      const GridSpec& grid) {
  std::vector<std::vector<double>> profiles(k, std::vector<double>(grid.n));
  for (std::size_t l = 1; l <= k; ++l) {
    const double amp = 1.0 / static_cast<double>(l);
    for (std::size_t j = 0; j < grid.n; ++j) {
      profiles[l - 1][j] =
          amp * std::sin(std::numbers::pi * static_cast<double>(l) * grid.node(j));
    }
  }
  return profiles;
}

inline NoiseModel build_noise_model(std::vector<std::vector<double>> profiles,
                                    const GridSpec& grid, double epsilon) {
  if (profiles.empty()) throw DomainError("noise model needs K >= 1 modes");
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw DomainError("noise amplitude epsilon must be finite and >= 0");
  }
  NoiseModel m;
  m.k = profiles.size();
  m.epsilon = epsilon;
  m.f_phi.assign(grid.n, 0.0);
  for (const auto& p : profiles) {
    if (p.size() != grid.n) {
      throw DomainError("noise profile length " + std::to_string(p.size()) +
                        " does not match N=" + std::to_string(grid.n));
    }
    for (std::size_t j = 0; j < grid.n; ++j) {
      if (!std::isfinite(p[j])) throw DomainError("noise profile is not finite");
      m.f_phi[j] += p[j] * p[j];
    }
  }
  m.mode_profiles = std::move(profiles);
  return m;
}

/// Built-in profile family a_l sin(pi l x), l = 1..K.
inline NoiseModel build_noise_model(std::size_t k, const GridSpec& grid,
                                    double epsilon) {
  if (k < 1) throw DomainError("noise model needs K >= 1 modes");
  return build_noise_model(sine_profiles(k, grid), grid, epsilon);
}

/// Brownian increments, one row per time step and one column per mode.
struct WienerPath {
  std::uint64_t seed = 0;
  double dt = 0.0;
  std::size_t steps = 0;
  std::size_t k = 0;
  std::vector<double> increments;  // row-major steps x K
  int level = 0;

  double operator()(std::size_t step, std::size_t mode) const {
    return increments[step * k + mode];
  }
  std::span<const double> row(std::size_t step) const {
    return std::span<const double>(increments).subspan(step * k, k);
  }

  friend bool operator==(const WienerPath&, const WienerPath&) = default;
};

inline WienerPath sample_wiener_path(std::size_t k, std::size_t steps,
                                     double dt, std::uint64_t seed,
                                     int level = 0) {
  if (steps < 1) throw DomainError("a Wiener path needs at least one step");
  if (!(dt > 0.0)) throw DomainError("Wiener path spacing dt must be > 0");
  if (k < 1) throw DomainError("a Wiener path needs K >= 1 modes");
  WienerPath p;
  p.seed = seed;
  p.dt = dt;
  p.steps = steps;
  p.k = k;
  p.level = level;
  p.increments.resize(steps * k);
  const CounterNormal normal(seed);
  const double scale = std::sqrt(dt);
  for (std::size_t n = 0; n < steps; ++n)
    for (std::size_t l = 0; l < k; ++l) p.increments[n * k + l] = scale * normal(n, l);
  return p;
}

inline WienerPath sample_wiener_path(const NoiseModel& model, std::size_t steps,
                                     double dt, std::uint64_t seed,
                                     int level = 0) {
  return sample_wiener_path(model.k, steps, dt, seed, level);
}

/// Sums blocks of `factor` consecutive increments. Power-of-two factors are
/// reduced by repeated pairwise halving, so coarsening by 4 is bit-identical
/// to coarsening by 2 twice.
inline WienerPath coarsen_path(const WienerPath& path, std::size_t factor) {
  if (factor == 0 || path.steps % factor != 0) {
    throw DivisibilityError("coarsening factor " + std::to_string(factor) +
                            " does not divide " + std::to_string(path.steps) +
                            " steps");
  }
  if (factor == 1) return path;
  if (std::has_single_bit(factor) && factor > 2) {
    return coarsen_path(coarsen_path(path, 2), factor / 2);
  }
  WienerPath c;
  c.seed = path.seed;
  c.dt = path.dt * static_cast<double>(factor);
  c.steps = path.steps / factor;
  c.k = path.k;
  c.level = path.level - 1;
  c.increments.assign(c.steps * c.k, 0.0);
  for (std::size_t n = 0; n < c.steps; ++n)
    for (std::size_t f = 0; f < factor; ++f)
      for (std::size_t l = 0; l < c.k; ++l)
        c.increments[n * c.k + l] += path(n * factor + f, l);
  return c;
}

/// dW_n(x_j) = epsilon * sum_l profile_l(x_j) * d_beta_l[n].
inline void increment_field(const WienerPath& path, std::size_t n,
                            const NoiseModel& model, std::span<double> out) {
  if (n >= path.steps) {
    throw IndexError("step " + std::to_string(n) + " outside path of " +
                     std::to_string(path.steps) + " steps");
  }
  if (path.k != model.k) {
    throw ShapeError("path has " + std::to_string(path.k) +
                     " modes, noise model has " + std::to_string(model.k));
  }
  std::fill(out.begin(), out.end(), 0.0);
  if (model.epsilon == 0.0) return;
  for (std::size_t l = 0; l < model.k; ++l) {
    const double db = path(n, l);
    const auto& prof = model.mode_profiles[l];
    check_length(prof.size(), out.size(), "increment_field");
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += prof[j] * db;
  }
  for (auto& v : out) v *= model.epsilon;
}

inline std::vector<double> increment_field(const WienerPath& path, std::size_t n,
                                           const NoiseModel& model,
                                           const GridSpec& grid) {
  std::vector<double> out(grid.n);
  increment_field(path, n, model, out);
  return out;
}

// Path files: "SFNSPATH", u32 version, u64 seed, u64 K, u64 steps, f64 dt,
// then steps*K f64 increments, row-major. All little-endian.
namespace detail {

inline constexpr char kPathMagic[8] = {'S', 'F', 'N', 'S', 'P', 'A', 'T', 'H'};
inline constexpr std::uint32_t kPathVersion = 1;

template <class T>
void put_le(std::ostream& os, T value) {
  static_assert(std::endian::native == std::endian::little,
                "binary formats assume a little-endian host");
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  os.write(buf, sizeof(T));
}

template <class T>
T get_le(std::istream& is, const std::string& path) {
  char buf[sizeof(T)];
  if (!is.read(buf, sizeof(T))) throw IoError(path, "truncated file");
  T value;
  std::memcpy(&value, buf, sizeof(T));
  return value;
}

}  // namespace detail

inline void save_path(const WienerPath& path, const std::string& filename) {
  std::ofstream os(filename, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError(filename, "cannot open for writing");
  os.write(detail::kPathMagic, sizeof detail::kPathMagic);
  detail::put_le<std::uint32_t>(os, detail::kPathVersion);
  detail::put_le<std::uint64_t>(os, path.seed);
  detail::put_le<std::uint64_t>(os, path.k);
  detail::put_le<std::uint64_t>(os, path.steps);
  detail::put_le<double>(os, path.dt);
  for (double v : path.increments) detail::put_le<double>(os, v);
  if (!os) throw IoError(filename, "write failed");
}

inline WienerPath load_path(const std::string& filename) {
  std::ifstream is(filename, std::ios::binary);
  if (!is) throw IoError(filename, "cannot open for reading");
  char magic[sizeof detail::kPathMagic];
  if (!is.read(magic, sizeof magic) ||
      std::memcmp(magic, detail::kPathMagic, sizeof magic) != 0) {
    throw IoError(filename, "not a Wiener path file");
  }
  if (detail::get_le<std::uint32_t>(is, filename) != detail::kPathVersion) {
    throw IoError(filename, "unsupported path file version");
  }
  WienerPath p;
  p.seed = detail::get_le<std::uint64_t>(is, filename);
  p.k = detail::get_le<std::uint64_t>(is, filename);
  p.steps = detail::get_le<std::uint64_t>(is, filename);
  p.dt = detail::get_le<double>(is, filename);
  p.increments.resize(p.steps * p.k);
  for (auto& v : p.increments) v = detail::get_le<double>(is, filename);
  return p;
}

}  // namespace sfnse
