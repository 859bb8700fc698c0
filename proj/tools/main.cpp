#include <fmt/format.h>

#include <CLI11.hpp>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "lodspde/errors.hpp"
#include "lodspde/studies.hpp"
#include "lodspde/validate.hpp"

namespace fs = std::filesystem;
using namespace lodspde;

namespace {

enum Exit : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kConfig = 3,
  kCache = 4,
  kValidation = 5,
};

struct Options {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::string out = "results";
  std::optional<std::string> cache;
  int threads = 1;
  bool validate = false;
};

void write_common(const Workbench& bench, const fs::path& out,
                  const std::string& command) {
  write_text(out / fmt::format("manifest_{}.txt", command),
             manifest_text(bench.config(), command));
  std::ostringstream coefficient;
  bench.coefficient().write(coefficient);
  write_text(out / "coefficient.txt", coefficient.str());
}

int run(const std::string& command, const Options& opt) {
  ExperimentConfig config = opt.config ? ExperimentConfig::load(*opt.config)
                                       : ExperimentConfig{};
  if (opt.seed) config.master_seed = *opt.seed;
  config.validate();
  const fs::path out(opt.out);

  if (command == "plot-data") {
    write_text(out / "plot_data.csv", plot_data_csv(out));
    std::cout << "wrote " << (out / "plot_data.csv").string() << "\n";
    return kOk;
  }

  std::optional<fs::path> cache;
  if (opt.cache) {
    cache = fs::path(*opt.cache);
  } else if (command == "correctors") {
    cache = out / "cache";
  }
  Workbench bench(config, Parallelism{opt.threads}, cache);

  if (opt.validate) {
    bool ok = true;
    for (const auto& r : run_invariant_checks(bench, config.coarse_exponents)) {
      std::cout << (r.passed ? "[ok]   " : "[FAIL] ") << r.name;
      if (!r.detail.empty()) std::cout << " (" << r.detail << ")";
      std::cout << "\n";
      ok = ok && r.passed;
    }
    if (!ok) {
      std::cerr << "error: invariant checks failed\n";
      return kValidation;
    }
  }

  if (command == "correctors") {
    const std::string csv = corrector_csv(bench);
    bench.save_cache();
    for (int p : config.all_coarse_exponents()) {
      std::cout << fmt::format("H=2^-{}: offline {:.3f} s\n", p,
                               bench.lod_space(p).offline_seconds());
    }
    write_text(out / "correctors.csv", csv);
  } else if (command == "strong") {
    write_text(out / "strong_error.csv", strong_csv(strong_error_study(bench)));
  } else if (command == "weak") {
    const WeakStudy w = weak_error_study(bench, true, true);
    write_text(out / "weak_error.csv", weak_csv(w.rows));
    write_text(out / "mlmc_levels.csv", mlmc_levels_csv(w.mlmc_levels));
  } else if (command == "mlmc") {
    const WeakStudy w = weak_error_study(bench, false, true);
    write_text(out / "mlmc_error.csv", weak_csv(w.rows));
    write_text(out / "mlmc_levels.csv", mlmc_levels_csv(w.mlmc_levels));
  } else if (command == "timing") {
    const auto rows = timing_study(bench);
    write_text(out / "timing.csv", timing_csv(rows));
    write_text(out / "timing_pilot.csv", timing_pilot_csv(rows));
  }
  write_common(bench, out, command);
  std::cout << fmt::format("{}: done (config {:016x}, seed {})\n", command,
                           config.hash(), config.master_seed);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LOD solver and Monte Carlo experiments for the stochastic "
               "heat equation with a multiscale coefficient"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  Options opt;
  app.add_option("--config", opt.config, "experiment config file");
  app.add_option("--seed", opt.seed, "master seed (overrides the config)");
  app.add_option("--out", opt.out, "output directory")->capture_default_str();
  app.add_option("--cache", opt.cache, "corrector cache directory");
  app.add_option("--threads", opt.threads, "worker threads")
      ->check(CLI::Range(1, 1024))
      ->capture_default_str();
  app.add_flag("--validate", opt.validate, "run invariant checks first");

  std::string command;
  const std::pair<const char*, const char*> subcommands[] = {
      {"correctors", "build and cache the multiscale spaces"},
      {"strong", "strong error study -> strong_error.csv"},
      {"weak", "weak error study (MC and MLMC) -> weak_error.csv"},
      {"mlmc", "LOD-MLMC runs only -> mlmc_error.csv"},
      {"timing", "projected cost study -> timing.csv"},
      {"plot-data", "merge study CSVs in --out -> plot_data.csv"},
  };
  for (const auto& [name, help] : subcommands) {
    app.add_subcommand(name, help)->callback([&command, n = name] { command = n; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    return run(command, opt);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfig;
  } catch (const CacheMismatch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kCache;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
}
