#pragma once

// Run configuration (flat `section.key = value` files), CSV output and the
// binary snapshot format.

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "sfnse/diagnostics.hpp"
#include "sfnse/dynamics.hpp"
#include "sfnse/errors.hpp"
#include "sfnse/experiments.hpp"
#include "sfnse/noise.hpp"
#include "sfnse/spectral.hpp"

namespace sfnse {

/// Every field has a default reproducing the soliton experiment setup:
/// sech(x) e^{2ix} on [-20, 20), N = 400, dt = 0.01, T = 10, alpha = 0.6,
/// lambda = 1, sigma = 1, epsilon = 0.01, K = 100 sine modes.
struct RunConfig {
  double grid_a = -20.0;
  double grid_b = 20.0;
  std::size_t grid_n = 400;

  ModelParams model{};
  Integrator integrator = Integrator::midpoint;
  SchemeParams scheme{};

  std::size_t noise_k = 100;
  NoiseProfile noise_profile = NoiseProfile::sine;
  std::uint64_t seed = 1;

  double horizon = 10.0;
  InitialSoliton initial{};

  std::string out_dir = "out";
  std::size_t diagnostics_stride = 10;
  std::size_t snapshot_stride = 100;
  MassMode mass_mode = MassMode::norm;

  std::vector<double> alphas{0.6, 0.75, 0.9};
  unsigned threads = 0;
  std::vector<double> mass_times{0.0, 2.0, 4.0, 6.0, 8.0, 10.0};

  double converge_base_dt = 0.01;
  int converge_levels = 5;
  int converge_ref_level = 5;
  std::size_t converge_paths = 100;

  std::size_t energy_paths = 10;

  GridSpec grid() const { return build_grid(grid_a, grid_b, grid_n); }

  ExperimentSetup setup() const {
    ExperimentSetup s;
    s.grid = grid();
    s.model = model;
    s.scheme = scheme;
    s.integrator = integrator;
    s.noise_modes = noise_k;
    s.profile = noise_profile;
    s.seed = seed;
    s.horizon = horizon;
    s.initial = initial;
    s.threads = threads;
    return s;
  }

  MassTableConfig mass_table() const {
    return {setup(), alphas, mass_times, mass_mode};
  }
  ConvergenceConfig convergence() const {
    return {setup(), converge_base_dt, converge_levels, converge_ref_level,
            converge_paths};
  }
  EnsembleConfig ensemble() const { return {setup(), energy_paths}; }
  FieldEvolutionConfig field_evolution(std::vector<double> field_alphas) const {
    return {setup(), std::move(field_alphas), snapshot_stride, diagnostics_stride,
            mass_mode};
  }

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

// ---------------------------------------------------------------------------
// Number formatting

/// Shortest text of at most 17 significant digits that reads back bit-exactly.
inline std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v,
                           std::chars_format::general, 17);
  return std::string(buf.data(), res.ptr);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <class T>
bool parse_number(std::string_view text, T& out) {
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  if (begin != end && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc{} && ptr == end;
}

struct ConfigKey {
  const char* name;
  const char* doc;
  std::function<void(RunConfig&, std::string_view)> parse;
  std::function<std::string(const RunConfig&)> format;
};

inline double to_double(std::string_view key, std::string_view v) {
  double d = 0.0;
  if (!parse_number(v, d) || !std::isfinite(d)) {
    throw ValidationError(std::string(key), "expected a number, got '" + std::string(v) + "'");
  }
  return d;
}

template <class T>
T to_integer(std::string_view key, std::string_view v) {
  T i{};
  if (!parse_number(v, i)) {
    throw ValidationError(std::string(key),
                          "expected a non-negative integer, got '" + std::string(v) + "'");
  }
  return i;
}

inline bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ValidationError(std::string(key), "expected true or false");
}

inline std::vector<double> to_list(std::string_view key, std::string_view v) {
  std::vector<double> out;
  while (true) {
    const auto comma = v.find(',');
    out.push_back(to_double(key, trim(v.substr(0, comma))));
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  return out;
}

inline std::string format_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += format_double(v[i]);
  }
  return s;
}

#define SFNSE_NUM(key, doc, field)                                                \
  ConfigKey {                                                                     \
    key, doc, [](RunConfig& c, std::string_view v) { c.field = to_double(key, v); }, \
        [](const RunConfig& c) { return format_double(c.field); }                 \
  }
#define SFNSE_INT(key, doc, field)                                                \
  ConfigKey {                                                                     \
    key, doc,                                                                     \
        [](RunConfig& c, std::string_view v) {                                    \
          c.field = to_integer<decltype(c.field)>(key, v);                        \
        },                                                                        \
        [](const RunConfig& c) { return std::to_string(c.field); }               \
  }

inline const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      SFNSE_NUM("grid.a", "left end of the periodic domain", grid_a),
      SFNSE_NUM("grid.b", "right end of the periodic domain", grid_b),
      SFNSE_INT("grid.N", "number of grid points (even, >= 4)", grid_n),
      SFNSE_NUM("model.alpha", "fractional exponent, in (0, 1]", model.alpha),
      SFNSE_NUM("model.lambda", "nonlinearity sign (1 defocusing, -1 focusing)", model.lambda),
      SFNSE_NUM("model.sigma", "nonlinearity power, >= 0", model.sigma),
      SFNSE_NUM("model.epsilon", "noise amplitude, >= 0", model.epsilon),
      ConfigKey{"scheme.integrator", "midpoint | splitting",
                [](RunConfig& c, std::string_view v) {
                  if (v == "midpoint") {
                    c.integrator = Integrator::midpoint;
                  } else if (v == "splitting") {
                    c.integrator = Integrator::splitting;
                  } else {
                    throw ValidationError("scheme.integrator", "expected midpoint or splitting");
                  }
                },
                [](const RunConfig& c) { return std::string(to_string(c.integrator)); }},
      SFNSE_NUM("scheme.dt", "time step, > 0", scheme.dt),
      SFNSE_NUM("scheme.fp_tol", "midpoint fixed-point tolerance (discrete l2)", scheme.fp_tol),
      SFNSE_INT("scheme.fp_max_iter", "midpoint fixed-point iteration cap", scheme.fp_max_iter),
      ConfigKey{"scheme.nonlinear_splitting",
                "allow sigma > 0 in the splitting scheme (experimental)",
                [](RunConfig& c, std::string_view v) {
                  c.scheme.nonlinear_splitting = to_bool("scheme.nonlinear_splitting", v);
                },
                [](const RunConfig& c) {
                  return std::string(c.scheme.nonlinear_splitting ? "true" : "false");
                }},
      SFNSE_INT("noise.K", "number of noise modes", noise_k),
      ConfigKey{"noise.profile", "sine (a_l sin(pi l x), a_l = 1/l) | zero",
                [](RunConfig& c, std::string_view v) {
                  if (v == "sine") {
                    c.noise_profile = NoiseProfile::sine;
                  } else if (v == "zero") {
                    c.noise_profile = NoiseProfile::zero;
                  } else {
                    throw ValidationError("noise.profile", "expected sine or zero");
                  }
                },
                [](const RunConfig& c) {
                  return std::string(c.noise_profile == NoiseProfile::sine ? "sine" : "zero");
                }},
      SFNSE_INT("noise.seed", "master RNG seed (SFNSE_SEED overrides)", seed),
      SFNSE_NUM("horizon.T", "final time, a multiple of scheme.dt", horizon),
      SFNSE_NUM("initial.center", "soliton center c in sech(x - c) e^{i v x}", initial.center),
      SFNSE_NUM("initial.velocity", "soliton wavenumber v", initial.velocity),
      ConfigKey{"outputs.dir", "output directory",
                [](RunConfig& c, std::string_view v) { c.out_dir = std::string(v); },
                [](const RunConfig& c) { return c.out_dir; }},
      SFNSE_INT("outputs.diagnostics_stride", "steps between diagnostics rows (0: off)",
                diagnostics_stride),
      SFNSE_INT("outputs.snapshot_stride", "steps between snapshots (0: off)", snapshot_stride),
      ConfigKey{"outputs.mass_mode", "norm (sqrt of h sum |u|^2) | squared",
                [](RunConfig& c, std::string_view v) {
                  if (v == "norm") {
                    c.mass_mode = MassMode::norm;
                  } else if (v == "squared") {
                    c.mass_mode = MassMode::squared;
                  } else {
                    throw ValidationError("outputs.mass_mode", "expected norm or squared");
                  }
                },
                [](const RunConfig& c) {
                  return std::string(c.mass_mode == MassMode::norm ? "norm" : "squared");
                }},
      ConfigKey{"experiment.alphas", "comma-separated alpha list for mass-table/figures",
                [](RunConfig& c, std::string_view v) {
                  c.alphas = to_list("experiment.alphas", v);
                },
                [](const RunConfig& c) { return format_list(c.alphas); }},
      SFNSE_INT("experiment.threads", "worker threads (0: hardware concurrency)", threads),
      ConfigKey{"mass_table.times", "comma-separated sample times",
                [](RunConfig& c, std::string_view v) {
                  c.mass_times = to_list("mass_table.times", v);
                },
                [](const RunConfig& c) { return format_list(c.mass_times); }},
      SFNSE_NUM("converge.base_dt", "coarsest time step", converge_base_dt),
      SFNSE_INT("converge.levels", "number of test levels r = 0..levels-1", converge_levels),
      SFNSE_INT("converge.ref_level", "reference level (dt = base_dt / 2^ref_level)",
                converge_ref_level),
      SFNSE_INT("converge.n_paths", "Monte-Carlo paths", converge_paths),
      SFNSE_INT("energy.n_paths", "trajectories in the energy ensemble", energy_paths),
  };
  return keys;
}

#undef SFNSE_NUM
#undef SFNSE_INT

}  // namespace detail

/// Semantic checks; throws ValidationError naming the offending key.
inline void validate(const RunConfig& c) {
  auto fail = [](const char* key, const std::string& msg) {
    throw ValidationError(key, msg);
  };
  if (!(c.grid_b > c.grid_a)) fail("grid.b", "must exceed grid.a");
  if (c.grid_n < 4 || c.grid_n % 2 != 0) fail("grid.N", "must be even and >= 4");
  if (!(c.model.alpha > 0.0 && c.model.alpha <= 1.0)) fail("model.alpha", "must lie in (0, 1]");
  if (!(c.model.sigma >= 0.0)) fail("model.sigma", "must be >= 0");
  if (!(c.model.epsilon >= 0.0)) fail("model.epsilon", "must be >= 0");
  if (!(c.scheme.dt > 0.0)) fail("scheme.dt", "must be > 0");
  if (!(c.scheme.fp_tol > 0.0)) fail("scheme.fp_tol", "must be > 0");
  if (c.scheme.fp_max_iter < 1) fail("scheme.fp_max_iter", "must be >= 1");
  if (c.noise_k < 1) fail("noise.K", "must be >= 1");
  if (!(c.horizon >= 0.0)) fail("horizon.T", "must be >= 0");
  try {
    steps_for(c.horizon, c.scheme.dt);
  } catch (const ConfigError& e) {
    fail("horizon.T", e.what());
  }
  if (c.alphas.empty()) fail("experiment.alphas", "must not be empty");
  for (double a : c.alphas)
    if (!(a > 0.0 && a <= 1.0)) fail("experiment.alphas", "every alpha must lie in (0, 1]");
  for (double t : c.mass_times)
    if (!(t >= 0.0)) fail("mass_table.times", "times must be >= 0");
  if (!(c.converge_base_dt > 0.0)) fail("converge.base_dt", "must be > 0");
  if (c.converge_levels < 1) fail("converge.levels", "must be >= 1");
  if (c.converge_ref_level <= c.converge_levels - 1 || c.converge_ref_level > 30) {
    fail("converge.ref_level", "must be finer than every test level (and <= 30)");
  }
  if (c.converge_paths < 1) fail("converge.n_paths", "must be >= 1");
  if (c.energy_paths < 1) fail("energy.n_paths", "must be >= 1");
}

/// Parses a flat config file: one `section.key = value` per line, `#` starts
/// a comment, blank lines ignored. Unspecified keys keep their defaults.
inline RunConfig parse_config(std::string_view text) {
  RunConfig cfg;
  std::map<std::string, const detail::ConfigKey*, std::less<>> index;
  for (const auto& k : detail::config_keys()) index.emplace(k.name, &k);
  std::set<std::string, std::less<>> seen;

  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);

    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    if (detail::trim(line).empty()) continue;

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      const auto col = line.find_first_not_of(" \t") + 1;
      throw ParseError(line_no, col, "expected 'key = value'");
    }
    const std::string_view key = detail::trim(line.substr(0, eq));
    const std::string_view value = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError(line_no, eq + 1, "missing key before '='");
    const auto bad = key.find_first_not_of(
        "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_.");
    if (bad != std::string_view::npos) {
      throw ParseError(line_no, static_cast<std::size_t>(key.data() - line.data()) + bad + 1,
                       "invalid character in key");
    }
    if (value.empty()) {
      throw ParseError(line_no, eq + 2, "missing value for '" + std::string(key) + "'");
    }
    const auto it = index.find(key);
    if (it == index.end()) throw UnknownKeyError(std::string(key));
    if (!seen.emplace(key).second) {
      throw ParseError(line_no, 1, "duplicate key '" + std::string(key) + "'");
    }
    it->second->parse(cfg, value);
  }
  validate(cfg);
  return cfg;
}

/// Config text listing every key with its documentation; parse_config() of
/// the result reproduces `cfg`.
inline std::string write_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& k : detail::config_keys()) {
    out += "# ";
    out += k.doc;
    out += "\n";
    out += k.name;
    out += " = ";
    out += k.format(cfg);
    out += "\n";
  }
  return out;
}

inline std::string write_default_config() { return write_config(RunConfig{}); }

inline RunConfig load_config(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError(path, "cannot open config file");
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

// ---------------------------------------------------------------------------
// CSV

/// A cell is either a number (17 significant digits) or free text.
struct CsvCell {
  CsvCell(double v) : text(format_double(v)) {}
  CsvCell(std::size_t v) : text(std::to_string(v)) {}
  CsvCell(int v) : text(std::to_string(v)) {}
  CsvCell(std::string s) : text(std::move(s)) {}
  CsvCell(const char* s) : text(s) {}
  std::string text;
};

using CsvRow = std::vector<CsvCell>;

inline std::string to_csv(const std::vector<std::string>& header,
                          const std::vector<CsvRow>& rows) {
  std::string out;
  auto emit = [&](const auto& cells, auto&& text_of) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += text_of(cells[i]);
    }
    out += '\n';
  };
  emit(header, [](const std::string& s) { return s; });
  for (const auto& r : rows) emit(r, [](const CsvCell& c) { return c.text; });
  return out;
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError(path, "cannot open for writing");
  os.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!os) throw IoError(path, "write failed");
}

inline void write_csv(const std::string& path, const std::vector<std::string>& header,
                      const std::vector<CsvRow>& rows) {
  write_text_file(path, to_csv(header, rows));
}

inline std::string mass_table_csv(const std::vector<MassRow>& rows) {
  std::vector<CsvRow> out;
  for (const auto& r : rows) out.push_back({r.time, r.alpha, r.mass});
  return to_csv({"time", "alpha", "mass"}, out);
}

inline std::string diagnostics_csv(const std::vector<DiagnosticsRecord>& recs) {
  std::vector<CsvRow> out;
  for (const auto& r : recs) out.push_back({r.time, r.mass, r.energy, r.max_amplitude});
  return to_csv({"time", "mass", "energy", "max_amplitude"}, out);
}

/// One row per level; the order column of the finest level is empty.
inline std::string convergence_csv(const ConvergenceReport& rep) {
  std::vector<CsvRow> out;
  for (std::size_t r = 0; r < rep.errors.size(); ++r) {
    out.push_back({r, rep.dts[r], rep.errors[r], rep.ci_halfwidths[r],
                   r < rep.orders.size() ? CsvCell(rep.orders[r]) : CsvCell("")});
  }
  return to_csv({"level", "dt", "error", "ci95_halfwidth", "order"}, out);
}

inline std::string energy_csv(const EnsembleReport& rep) {
  std::vector<std::string> header{"time", "mean_energy"};
  for (std::size_t i = 0; i < rep.per_path_energy.size(); ++i)
    header.push_back("path_" + std::to_string(i));
  std::vector<CsvRow> out;
  for (std::size_t n = 0; n < rep.times.size(); ++n) {
    CsvRow row{rep.times[n], rep.mean_energy[n]};
    for (const auto& series : rep.per_path_energy) row.emplace_back(series[n]);
    out.push_back(std::move(row));
  }
  return to_csv(header, out);
}

// ---------------------------------------------------------------------------
// Snapshots: "SFNS", u32 version, f64 a, f64 b, u64 N, f64 time, then N
// little-endian (Re, Im) f64 pairs.

inline constexpr char kSnapshotMagic[4] = {'S', 'F', 'N', 'S'};
inline constexpr std::uint32_t kSnapshotVersion = 1;

struct Snapshot {
  GridSpec grid;
  ComplexField field;
};

inline std::string encode_snapshot(const GridSpec& grid, const ComplexField& field) {
  check_length(field.size(), grid.n, "snapshot");
  std::ostringstream os(std::ios::binary);
  os.write(kSnapshotMagic, sizeof kSnapshotMagic);
  detail::put_le<std::uint32_t>(os, kSnapshotVersion);
  detail::put_le<double>(os, grid.a);
  detail::put_le<double>(os, grid.b);
  detail::put_le<std::uint64_t>(os, grid.n);
  detail::put_le<double>(os, field.time);
  for (const auto& v : field.values) {
    detail::put_le<double>(os, v.real());
    detail::put_le<double>(os, v.imag());
  }
  return os.str();
}

inline void write_snapshot(const std::string& path, const GridSpec& grid,
                           const ComplexField& field) {
  write_text_file(path, encode_snapshot(grid, field));
}

inline Snapshot read_snapshot(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError(path, "cannot open snapshot");
  char magic[sizeof kSnapshotMagic];
  if (!is.read(magic, sizeof magic) ||
      std::memcmp(magic, kSnapshotMagic, sizeof magic) != 0) {
    throw IoError(path, "not a snapshot file");
  }
  if (detail::get_le<std::uint32_t>(is, path) != kSnapshotVersion) {
    throw IoError(path, "unsupported snapshot version");
  }
  const double a = detail::get_le<double>(is, path);
  const double b = detail::get_le<double>(is, path);
  const auto n = detail::get_le<std::uint64_t>(is, path);
  Snapshot s;
  try {
    s.grid = build_grid(a, b, n);
  } catch (const DomainError& e) {
    throw IoError(path, std::string("invalid grid header: ") + e.what());
  }
  s.field = ComplexField(n, detail::get_le<double>(is, path));
  for (auto& v : s.field.values) {
    const double re = detail::get_le<double>(is, path);
    const double im = detail::get_le<double>(is, path);
    v = Complex(re, im);
  }
  return s;
}

}  // namespace sfnse
