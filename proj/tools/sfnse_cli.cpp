// Command-line front end: single trajectories, the mass table, the strong
// convergence study, the energy ensemble and the built-in self test.
//
// Exit codes: 0 success, 1 usage/config error, 2 numerical failure,
// 3 I/O error.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "sfnse/sfnse.hpp"

namespace fs = std::filesystem;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kNumerical = 2, kIo = 3 };

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::optional<std::size_t> paths;
  bool quiet = false;
  bool all_alphas = false;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config_path, "config file (key = value lines)");
  cmd->add_option("--seed", o.seed, "master seed (overrides SFNSE_SEED and config)");
  cmd->add_option("--out", o.out_dir, "output directory (overrides outputs.dir)");
  cmd->add_option("--paths", o.paths, "Monte-Carlo path count for converge/energy");
  cmd->add_flag("--quiet", o.quiet, "suppress progress output");
}

sfnse::RunConfig resolve_config(const Options& o) {
  sfnse::RunConfig cfg = o.config_path.empty() ? sfnse::RunConfig{}
                                               : sfnse::load_config(o.config_path);
  if (const char* env = std::getenv("SFNSE_SEED")) {
    std::uint64_t s = 0;
    if (!sfnse::detail::parse_number(std::string_view(env), s)) {
      throw sfnse::ValidationError("SFNSE_SEED", "expected an unsigned integer");
    }
    cfg.seed = s;
  }
  if (o.seed) cfg.seed = *o.seed;
  if (!o.out_dir.empty()) cfg.out_dir = o.out_dir;
  if (o.paths) {
    if (*o.paths == 0) throw sfnse::ValidationError("--paths", "must be >= 1");
    cfg.converge_paths = *o.paths;
    cfg.energy_paths = *o.paths;
  }
  return cfg;
}

fs::path prepare_out(const sfnse::RunConfig& cfg) {
  const fs::path dir(cfg.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw sfnse::IoError(cfg.out_dir, ec.message());
  return dir;
}

void warn(const sfnse::RunConfig& cfg, const Options& o) {
  if (o.quiet) return;
  for (const auto& w : sfnse::assumption_warnings(cfg.model))
    std::cerr << "warning: " << w << "\n";
}

std::string alpha_tag(double alpha) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", alpha);
  return buf;
}

int cmd_evolve(const Options& o) {
  const auto cfg = resolve_config(o);
  warn(cfg, o);
  const auto dir = prepare_out(cfg);
  const auto field_cfg =
      cfg.field_evolution(o.all_alphas ? cfg.alphas : std::vector<double>{cfg.model.alpha});
  const auto result = sfnse::run_field_evolution(field_cfg);

  const auto snap_dir = dir / "snapshots";
  std::error_code ec;
  fs::create_directories(snap_dir, ec);
  if (ec) throw sfnse::IoError(snap_dir.string(), ec.message());

  const auto grid = cfg.grid();
  std::vector<sfnse::CsvRow> index;
  for (const auto& s : result.snapshots) {
    char name[64];
    std::snprintf(name, sizeof name, "alpha_%s_step_%06zu.sfns", alpha_tag(s.alpha).c_str(),
                  s.step);
    sfnse::write_snapshot((snap_dir / name).string(), grid, s.field);
    index.push_back({s.alpha, s.step, s.field.time, std::string("snapshots/") + name});
  }
  sfnse::write_csv((dir / "snapshots.csv").string(), {"alpha", "step", "time", "file"}, index);

  for (std::size_t a = 0; a < field_cfg.alphas.size(); ++a) {
    const auto& recs = result.diagnostics[a];
    const auto file = dir / ("diagnostics_alpha_" + alpha_tag(field_cfg.alphas[a]) + ".csv");
    sfnse::write_text_file(file.string(), sfnse::diagnostics_csv(recs));
    if (!o.quiet && !recs.empty()) {
      std::cout << "alpha=" << field_cfg.alphas[a]
                << "  mass(0)=" << sfnse::format_double(recs.front().mass)
                << "  mass(" << recs.back().time << ")=" << sfnse::format_double(recs.back().mass)
                << "  energy=" << sfnse::format_double(recs.back().energy) << "\n";
    }
  }
  if (!o.quiet) std::cout << "wrote " << result.snapshots.size() << " snapshots to " << dir << "\n";
  return kOk;
}

int cmd_mass_table(const Options& o) {
  const auto cfg = resolve_config(o);
  warn(cfg, o);
  const auto dir = prepare_out(cfg);
  const auto rows = sfnse::run_mass_table(cfg.mass_table());
  sfnse::write_text_file((dir / "mass_table.csv").string(), sfnse::mass_table_csv(rows));
  if (!o.quiet) {
    for (const auto& r : rows)
      std::cout << "t=" << r.time << "  alpha=" << r.alpha
                << "  mass=" << sfnse::format_double(r.mass) << "\n";
  }
  return kOk;
}

int cmd_converge(const Options& o) {
  auto cfg = resolve_config(o);
  warn(cfg, o);
  const auto dir = prepare_out(cfg);
  cfg.integrator = sfnse::Integrator::splitting;
  const auto rep = sfnse::run_convergence_study(cfg.convergence());
  sfnse::write_text_file((dir / "convergence.csv").string(), sfnse::convergence_csv(rep));
  if (!o.quiet) {
    for (std::size_t r = 0; r < rep.errors.size(); ++r) {
      std::cout << "dt=" << rep.dts[r] << "  error=" << rep.errors[r] << " +- "
                << rep.ci_halfwidths[r];
      if (r < rep.orders.size()) std::cout << "  order=" << rep.orders[r];
      std::cout << "\n";
    }
    std::cout << "mean order " << rep.mean_order() << " over " << rep.n_paths << " paths\n";
  }
  return kOk;
}

int cmd_energy(const Options& o) {
  const auto cfg = resolve_config(o);
  warn(cfg, o);
  const auto dir = prepare_out(cfg);
  const auto rep = sfnse::run_energy_ensemble(cfg.ensemble());
  sfnse::write_text_file((dir / "energy.csv").string(), sfnse::energy_csv(rep));
  if (!o.quiet) {
    std::cout << "energy(0)=" << sfnse::format_double(rep.mean_energy.front())
              << "  mean energy(T)=" << sfnse::format_double(rep.mean_energy.back()) << " over "
              << rep.per_path_energy.size() << " paths\n";
  }
  return kOk;
}

int cmd_selftest(const Options& o) {
  resolve_config(o);  // report config problems even though the checks ignore it
  bool ok = true;
  for (const auto& r : sfnse::run_selftest()) {
    ok = ok && r.passed;
    if (!o.quiet || !r.passed) {
      std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << "  (" << r.measured
                << " <= " << r.bound << ")\n";
    }
  }
  return ok ? kOk : kNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral solver for the stochastic fractional nonlinear Schroedinger equation"};
  app.require_subcommand(1);
  Options opts;

  auto* evolve = app.add_subcommand("evolve", "single trajectory with diagnostics and snapshots");
  add_common(evolve, opts);
  evolve->add_flag("--all-alphas", opts.all_alphas, "run every alpha in experiment.alphas");
  auto* mass = app.add_subcommand("mass-table", "midpoint mass conservation table");
  add_common(mass, opts);
  auto* conv = app.add_subcommand("converge", "strong convergence study of the splitting scheme");
  add_common(conv, opts);
  auto* energy = app.add_subcommand("energy", "energy ensemble under the midpoint scheme");
  add_common(energy, opts);
  auto* self = app.add_subcommand("selftest", "operator and structure checks");
  add_common(self, opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*evolve) return cmd_evolve(opts);
    if (*mass) return cmd_mass_table(opts);
    if (*conv) return cmd_converge(opts);
    if (*energy) return cmd_energy(opts);
    if (*self) return cmd_selftest(opts);
  } catch (const sfnse::NonConvergence& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const sfnse::IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const sfnse::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const sfnse::DomainError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const sfnse::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumerical;
  }
  return kUsage;
}
