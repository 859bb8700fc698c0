#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lodspde/timestepper.hpp"

namespace lodspde {

/// Experiment parameters. Read from a flat `key = value` file (a TOML
/// subset: numbers, quoted strings, integer lists `[2, 3]`, `#` comments).
struct ExperimentConfig {
  int fine_exponent = 7;
  std::vector<int> coarse_exponents{2, 3, 4, 5};
  int epsilon_exponent = 6;
  double alpha_minus = 0.1;
  double alpha_plus = 10.0;
  double final_time = 0.5;
  double timestep = 0.01;
  double strong_amplitude = 1.0;
  double weak_amplitude = 1.0 / 25.0;
  double noise_decay = 0.01;
  double kappa_fraction = 1.0 / 16.0;
  /// Fixed localization; ceil(log2(1/H)) when unset.
  std::optional<int> ell;
  double gamma = 0.01;
  double delta = 1.0;
  std::uint64_t master_seed = 1;
  std::optional<std::uint64_t> coefficient_seed;
  int samples_strong = 20;
  int pilot_samples = 5;
  /// Coarse exponents of H_J for the LOD-MC and FEM-MC weak runs.
  std::vector<int> weak_mc_exponents{1, 2, 3, 4};
  /// Coarse exponents of H_J for LOD-MLMC (levels H_j = 2^-(j+1)).
  std::vector<int> weak_mlmc_exponents{1, 2, 3, 4, 5};
  NoiseLoadRule noise_rule = NoiseLoadRule::Nodal;

  int steps() const;
  int ell_for(int coarse_exponent) const;
  int truncation() const;
  /// Every coarse exponent any study needs, sorted.
  std::vector<int> all_coarse_exponents() const;

  /// Throws ConfigError on violated invariants.
  void validate() const;

  /// Canonical `key = value` text; parse(to_text()) round-trips.
  std::string to_text() const;
  std::uint64_t hash() const;

  static ExperimentConfig parse(std::istream& in, const std::string& origin);
  /// Throws ConfigError naming the path if it cannot be read.
  static ExperimentConfig load(const std::filesystem::path& path);
};

/// Problem of the studies with the given noise amplitude.
EvolutionProblem make_problem(const ExperimentConfig& config, double amplitude);

}  // namespace lodspde
