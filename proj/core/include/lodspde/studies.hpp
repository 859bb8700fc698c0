#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lodspde/coefficient.hpp"
#include "lodspde/config.hpp"
#include "lodspde/estimators.hpp"
#include "lodspde/lod.hpp"
#include "lodspde/parallel.hpp"

namespace lodspde {

/// Per-cell values log-uniform in [alpha_minus, alpha_plus] from the stream
/// `seed`; constant when the bounds coincide.
CoefficientField generate_coefficient(const ExperimentConfig& config,
                                      std::uint64_t seed);
/// Seed of the coefficient stream: coefficient_seed, or derived from the
/// master seed under the name "coefficient".
std::uint64_t coefficient_seed(const ExperimentConfig& config);

/// Shared state of the studies: fine mesh, coefficient, fine operators and
/// the multiscale spaces, built on first use.
class Workbench {
 public:
  explicit Workbench(ExperimentConfig config, Parallelism parallelism = {},
                     std::optional<std::filesystem::path> cache_dir = {});
  ~Workbench();
  Workbench(const Workbench&) = delete;
  Workbench& operator=(const Workbench&) = delete;

  const ExperimentConfig& config() const noexcept { return config_; }
  const Parallelism& parallelism() const noexcept { return parallelism_; }
  const Mesh& fine_mesh() const noexcept { return fine_mesh_; }
  const CoefficientField& coefficient() const noexcept { return coefficient_; }
  const SparseOperator& fine_stiffness() const noexcept { return stiffness_; }
  const SparseOperator& fine_mass() const noexcept { return mass_; }

  /// LOD space for H = 2^-p. Loaded from the cache directory when a
  /// matching file exists (CacheMismatch otherwise), else built.
  const MultiscaleSpace& lod_space(int coarse_exponent);
  const MultiscaleSpace& coarse_space(int coarse_exponent);
  /// Writes every built LOD space to the cache directory.
  void save_cache() const;
  std::filesystem::path cache_path(int coarse_exponent) const;

  /// Steppers are cached per (space, amplitude).
  const Stepper& fine_stepper(double amplitude);
  const Stepper& lod_stepper(int coarse_exponent, double amplitude);
  const Stepper& coarse_stepper(int coarse_exponent, double amplitude);

 private:
  const LevelPair& pair(int coarse_exponent);

  ExperimentConfig config_;
  Parallelism parallelism_;
  std::optional<std::filesystem::path> cache_dir_;
  Mesh fine_mesh_;
  CoefficientField coefficient_;
  SparseOperator stiffness_;
  SparseOperator mass_;
  std::map<int, std::unique_ptr<LevelPair>> pairs_;
  std::map<int, std::unique_ptr<MultiscaleSpace>> lod_;
  std::map<int, std::unique_ptr<MultiscaleSpace>> coarse_;
  std::map<std::pair<int, double>, std::unique_ptr<Stepper>> steppers_;
};

struct StrongRow {
  int coarse_exponent = 0;
  double H = 0.0;
  int ell = 0;
  int samples = 0;
  double lod_error = 0.0;
  double lod_stderr = 0.0;
  double fem_error = 0.0;
};

struct WeakRow {
  std::string method;
  int coarse_exponent = 0;
  double H_J = 0.0;
  std::int64_t total_samples = 0;
  double weak_error = 0.0;
  double statistical_error = 0.0;
};

struct MlmcLevelRow {
  int finest_exponent = 0;
  int level = 0;
  int coarse_exponent = 0;
  std::int64_t samples = 0;
  double variance = 0.0;
};

struct TimingRow {
  std::string method;
  int coarse_exponent = 0;
  double H_J = 0.0;
  double offline_seconds = 0.0;
  double projected_seconds = 0.0;
  /// Mean online wall time of one sample (MLMC: of the finest pair).
  double per_sample_seconds = 0.0;
  std::int64_t samples = 0;
};

std::vector<StrongRow> strong_error_study(Workbench& bench);

struct WeakStudy {
  std::vector<WeakRow> rows;
  std::vector<MlmcLevelRow> mlmc_levels;
};
/// LOD-MC and FEM-MC over weak_mc_exponents, LOD-MLMC over
/// weak_mlmc_exponents; either part can be skipped.
WeakStudy weak_error_study(Workbench& bench, bool run_mc = true,
                           bool run_mlmc = true);

std::vector<TimingRow> timing_study(Workbench& bench);
/// Same with an explicit pilot size; throws InvalidArgument below 1.
std::vector<TimingRow> timing_study(Workbench& bench, int pilot_samples);

/// Least-squares slope of log2(y) against log2(x).
double fit_log_slope(const std::vector<double>& x, const std::vector<double>& y);

// -- CSV -------------------------------------------------------------------

std::string strong_csv(const std::vector<StrongRow>& rows);
std::string weak_csv(const std::vector<WeakRow>& rows);
std::string mlmc_levels_csv(const std::vector<MlmcLevelRow>& rows);
std::string timing_csv(const std::vector<TimingRow>& rows);
std::string timing_pilot_csv(const std::vector<TimingRow>& rows);
std::string corrector_csv(Workbench& bench);

/// Long-format merge of the study CSVs present in `dir`:
///   study, method, H, quantity, value
std::string plot_data_csv(const std::filesystem::path& dir);

/// Writes `content` to `path`, creating parent directories.
void write_text(const std::filesystem::path& path, const std::string& content);
std::string read_text(const std::filesystem::path& path);

/// Provenance sidecar: library version, config hash, seed, command.
std::string manifest_text(const ExperimentConfig& config,
                          const std::string& command);

}  // namespace lodspde
