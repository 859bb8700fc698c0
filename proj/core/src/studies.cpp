#include "lodspde/studies.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "lodspde/basis_cache.hpp"
#include "lodspde/errors.hpp"
#include "lodspde/random.hpp"

namespace lodspde {
namespace {

using Clock = std::chrono::steady_clock;

constexpr int kFineKey = -1;
constexpr int kCoarseOffset = 1000;

double mass_norm(const SparseOperator& mass, const Eigen::VectorXd& v) {
  return std::sqrt(std::max(0.0, v.dot(mass.matrix * v)));
}

std::string real(double v) { return fmt::format("{:.17g}", v); }

double mesh_size(int exponent) { return std::ldexp(1.0, -exponent); }

/// Mean wall time of one sample over the pilot paths.
double pilot_seconds(const Stepper& stepper, std::uint64_t seed, int samples) {
  double total = 0.0;
  for (int i = 0; i < samples; ++i) {
    const NoisePath path =
        sample_path(stepper.problem().noise, seed, static_cast<std::uint64_t>(i));
    const auto start = Clock::now();
    const Eigen::VectorXd c = stepper.final_coefficients(&path);
    total += std::chrono::duration<double>(Clock::now() - start).count();
    if (!c.allFinite()) throw SolverError("non-finite pilot sample");
  }
  return total / samples;
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::stringstream in(read_text(p));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace

std::uint64_t coefficient_seed(const ExperimentConfig& config) {
  return config.coefficient_seed ? *config.coefficient_seed
                                 : derive_seed(config.master_seed, "coefficient");
}

CoefficientField generate_coefficient(const ExperimentConfig& config,
                                      std::uint64_t seed) {
  const int e = config.epsilon_exponent;
  const std::size_t cells = std::size_t{1} << (2 * e);
  std::vector<double> values(cells, config.alpha_minus);
  if (config.alpha_plus > config.alpha_minus) {
    SplitMix64 rng(seed);
    const double lo = std::log(config.alpha_minus);
    const double hi = std::log(config.alpha_plus);
    for (auto& v : values) {
      v = std::clamp(std::exp(lo + (hi - lo) * rng.uniform()),
                     config.alpha_minus, config.alpha_plus);
    }
  }
  return CoefficientField(e, std::move(values), config.alpha_minus,
                          config.alpha_plus);
}

Workbench::Workbench(ExperimentConfig config, Parallelism parallelism,
                     std::optional<std::filesystem::path> cache_dir)
    : config_(std::move(config)),
      parallelism_(parallelism),
      cache_dir_(std::move(cache_dir)),
      fine_mesh_((config_.validate(), Mesh::uniform(config_.fine_exponent))),
      coefficient_(generate_coefficient(config_, coefficient_seed(config_))),
      stiffness_(assemble_stiffness(fine_mesh_, coefficient_)),
      mass_(assemble_mass(fine_mesh_)) {}

Workbench::~Workbench() = default;

const LevelPair& Workbench::pair(int coarse_exponent) {
  auto& slot = pairs_[coarse_exponent];
  if (!slot) {
    slot = std::make_unique<LevelPair>(
        make_level_pair(coarse_exponent, config_.fine_exponent));
  }
  return *slot;
}

std::filesystem::path Workbench::cache_path(int coarse_exponent) const {
  if (!cache_dir_) throw InvalidArgument("no cache directory configured");
  return *cache_dir_ / fmt::format("basis_H{}_h{}.bin", coarse_exponent,
                                   config_.fine_exponent);
}

const MultiscaleSpace& Workbench::lod_space(int coarse_exponent) {
  auto& slot = lod_[coarse_exponent];
  if (!slot) {
    const LevelPair& lp = pair(coarse_exponent);
    const int ell = config_.ell_for(coarse_exponent);
    if (cache_dir_ && std::filesystem::exists(cache_path(coarse_exponent))) {
      slot = std::make_unique<MultiscaleSpace>(
          load_multiscale_space(cache_path(coarse_exponent), lp, coefficient_,
                                stiffness_, mass_, ell));
    } else {
      slot = std::make_unique<MultiscaleSpace>(build_multiscale_space(
          lp, coefficient_, stiffness_, mass_, ell, parallelism_));
    }
  }
  return *slot;
}

const MultiscaleSpace& Workbench::coarse_space(int coarse_exponent) {
  auto& slot = coarse_[coarse_exponent];
  if (!slot) {
    slot = std::make_unique<MultiscaleSpace>(MultiscaleSpace::coarse_fem(
        pair(coarse_exponent), stiffness_, mass_, coefficient_.hash()));
  }
  return *slot;
}

void Workbench::save_cache() const {
  if (!cache_dir_) throw InvalidArgument("no cache directory configured");
  std::filesystem::create_directories(*cache_dir_);
  for (const auto& [p, space] : lod_) {
    if (space) save_basis(*space, cache_path(p));
  }
}

const Stepper& Workbench::fine_stepper(double amplitude) {
  auto& slot = steppers_[{kFineKey, amplitude}];
  if (!slot) {
    slot = std::make_unique<Stepper>(make_problem(config_, amplitude),
                                     fine_mesh_, stiffness_, mass_);
  }
  return *slot;
}

const Stepper& Workbench::lod_stepper(int coarse_exponent, double amplitude) {
  auto& slot = steppers_[{coarse_exponent, amplitude}];
  if (!slot) {
    const MultiscaleSpace& space = lod_space(coarse_exponent);
    slot = std::make_unique<Stepper>(make_problem(config_, amplitude), space,
                                     mass_);
  }
  return *slot;
}

const Stepper& Workbench::coarse_stepper(int coarse_exponent, double amplitude) {
  auto& slot = steppers_[{kCoarseOffset + coarse_exponent, amplitude}];
  if (!slot) {
    const MultiscaleSpace& space = coarse_space(coarse_exponent);
    slot = std::make_unique<Stepper>(make_problem(config_, amplitude), space,
                                     mass_);
  }
  return *slot;
}

// -- studies ---------------------------------------------------------------

std::vector<StrongRow> strong_error_study(Workbench& bench) {
  const ExperimentConfig& cfg = bench.config();
  const double amplitude = cfg.strong_amplitude;
  const std::uint64_t seed = derive_seed(cfg.master_seed, "strong");
  const auto m = static_cast<std::size_t>(cfg.samples_strong);
  const Stepper& fine = bench.fine_stepper(amplitude);
  const NoiseModel& noise = fine.problem().noise;

  std::vector<Eigen::VectorXd> reference(m);
  parallel_for(bench.parallelism(), m, [&](std::size_t i) {
    const NoisePath path = sample_path(noise, seed, i);
    reference[i] = fine.final_coefficients(&path);
  });

  std::vector<StrongRow> rows;
  for (int p : cfg.coarse_exponents) {
    const Stepper& lod = bench.lod_stepper(p, amplitude);
    const Stepper& fem = bench.coarse_stepper(p, amplitude);
    std::vector<double> lod_err(m);
    std::vector<double> fem_err(m);
    parallel_for(bench.parallelism(), m, [&](std::size_t i) {
      const NoisePath path = sample_path(noise, seed, i);
      lod_err[i] = mass_norm(bench.fine_mass(),
                             reference[i] - lod.to_fine(lod.final_coefficients(&path)));
      fem_err[i] = mass_norm(bench.fine_mass(),
                             reference[i] - fem.to_fine(fem.final_coefficients(&path)));
    });
    const ScalarSummary l = summarize(lod_err);
    const ScalarSummary f = summarize(fem_err);
    rows.push_back({p, mesh_size(p), cfg.ell_for(p), cfg.samples_strong, l.mean,
                    l.standard_error, f.mean});
  }
  return rows;
}

WeakStudy weak_error_study(Workbench& bench, bool run_mc, bool run_mlmc) {
  const ExperimentConfig& cfg = bench.config();
  const double amplitude = cfg.weak_amplitude;
  const Stepper& fine = bench.fine_stepper(amplitude);
  const Eigen::VectorXd reference = fine.final_coefficients(nullptr);
  auto weak_error = [&](const EstimatorReport& r) {
    return mass_norm(bench.fine_mass(), reference - r.estimate.values);
  };

  WeakStudy out;
  if (run_mc) {
    const std::uint64_t lod_seed = derive_seed(cfg.master_seed, "weak-lod-mc");
    const std::uint64_t fem_seed = derive_seed(cfg.master_seed, "weak-fem-mc");
    for (int p : cfg.weak_mc_exponents) {
      const std::int64_t m = mc_samples(cfg.gamma, p);
      const EstimatorReport lod =
          mc_estimate(bench.lod_stepper(p, amplitude), m,
                      derive_seed(lod_seed, p), bench.parallelism());
      out.rows.push_back({"LOD-MC", p, mesh_size(p), m, weak_error(lod),
                          lod.statistical_error});
      const EstimatorReport fem =
          mc_estimate(bench.coarse_stepper(p, amplitude), m,
                      derive_seed(fem_seed, p), bench.parallelism());
      out.rows.push_back({"FEM-MC", p, mesh_size(p), m, weak_error(fem),
                          fem.statistical_error});
    }
  }
  if (run_mlmc) {
    const std::uint64_t mlmc_seed = derive_seed(cfg.master_seed, "mlmc");
    for (int p : cfg.weak_mlmc_exponents) {
      const SampleAllocation alloc =
          SampleAllocation::mlmc(cfg.gamma, cfg.delta, p - 1);
      std::vector<const Stepper*> hierarchy;
      for (const auto& level : alloc.levels) {
        hierarchy.push_back(&bench.lod_stepper(level.coarse_exponent, amplitude));
      }
      const EstimatorReport r =
          mlmc_estimate(hierarchy, alloc, derive_seed(mlmc_seed, p),
                        bench.fine_mass(), bench.parallelism());
      out.rows.push_back({"LOD-MLMC", p, mesh_size(p), alloc.total_samples(),
                          weak_error(r), r.statistical_error});
      for (const auto& level : r.levels) {
        out.mlmc_levels.push_back({p, level.level, level.coarse_exponent,
                                   level.samples, level.variance});
      }
    }
  }
  return out;
}

std::vector<TimingRow> timing_study(Workbench& bench) {
  return timing_study(bench, bench.config().pilot_samples);
}

std::vector<TimingRow> timing_study(Workbench& bench, int pilot) {
  const ExperimentConfig& cfg = bench.config();
  if (pilot < 1) {
    throw InvalidArgument("timing pilot needs at least one sample");
  }
  const double amplitude = cfg.weak_amplitude;
  const std::uint64_t seed = derive_seed(cfg.master_seed, "pilot");

  const double fine_t = pilot_seconds(bench.fine_stepper(amplitude), seed, pilot);
  std::map<int, double> lod_t;
  auto lod_time = [&](int p) {
    auto it = lod_t.find(p);
    if (it == lod_t.end()) {
      it = lod_t.emplace(p, pilot_seconds(bench.lod_stepper(p, amplitude), seed,
                                          pilot)).first;
    }
    return it->second;
  };

  std::vector<TimingRow> rows;
  for (int p : cfg.weak_mlmc_exponents) {
    const std::int64_t m = mc_samples(cfg.gamma, p);
    const double h = mesh_size(p);
    rows.push_back({"FEM-MC(h)", p, h, 0.0, fine_t * m, fine_t, m});
    const double offline_p = bench.lod_space(p).offline_seconds();
    rows.push_back({"LOD-MC", p, h, offline_p, lod_time(p) * m, lod_time(p), m});

    const SampleAllocation alloc =
        SampleAllocation::mlmc(cfg.gamma, cfg.delta, p - 1);
    double projected = 0.0;
    double offline = 0.0;
    double finest_pair = 0.0;
    for (const auto& level : alloc.levels) {
      const int q = level.coarse_exponent;
      const double t = lod_time(q) + (level.level > 0 ? lod_time(q - 1) : 0.0);
      projected += static_cast<double>(level.samples) * t;
      offline += bench.lod_space(q).offline_seconds();
      finest_pair = t;
    }
    rows.push_back({"LOD-MLMC", p, h, offline, projected, finest_pair,
                    alloc.total_samples()});
  }
  return rows;
}

double fit_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw InvalidArgument("slope fit needs at least two points");
  }
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log2(x[i]);
    const double ly = std::log2(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// -- CSV -------------------------------------------------------------------

std::string strong_csv(const std::vector<StrongRow>& rows) {
  std::string s = "H,ell,M,lod_error,lod_stderr,fem_error\n";
  for (const auto& r : rows) {
    s += fmt::format("{},{},{},{},{},{}\n", real(r.H), r.ell, r.samples,
                     real(r.lod_error), real(r.lod_stderr), real(r.fem_error));
  }
  return s;
}

std::string weak_csv(const std::vector<WeakRow>& rows) {
  std::string s = "method,H_J,total_samples,weak_error\n";
  for (const auto& r : rows) {
    s += fmt::format("{},{},{},{}\n", r.method, real(r.H_J), r.total_samples,
                     real(r.weak_error));
  }
  return s;
}

std::string mlmc_levels_csv(const std::vector<MlmcLevelRow>& rows) {
  std::string s = "H_J,level,H_j,samples,level_variance\n";
  for (const auto& r : rows) {
    s += fmt::format("{},{},{},{},{}\n", real(mesh_size(r.finest_exponent)),
                     r.level, real(mesh_size(r.coarse_exponent)), r.samples,
                     real(r.variance));
  }
  return s;
}

std::string timing_csv(const std::vector<TimingRow>& rows) {
  std::string s = "method,H_J,offline_seconds,projected_seconds\n";
  for (const auto& r : rows) {
    s += fmt::format("{},{},{},{}\n", r.method, real(r.H_J),
                     real(r.offline_seconds), real(r.projected_seconds));
  }
  return s;
}

std::string timing_pilot_csv(const std::vector<TimingRow>& rows) {
  std::string s = "method,H_J,per_sample_seconds,total_samples\n";
  for (const auto& r : rows) {
    s += fmt::format("{},{},{},{}\n", r.method, real(r.H_J),
                     real(r.per_sample_seconds), r.samples);
  }
  return s;
}

std::string corrector_csv(Workbench& bench) {
  std::string s = "H,ell,dimension,corrector_nnz,coefficient_hash\n";
  for (int p : bench.config().all_coarse_exponents()) {
    const MultiscaleSpace& space = bench.lod_space(p);
    s += fmt::format("{},{},{},{},{:016x}\n", real(mesh_size(p)), space.ell(),
                     space.dimension(), space.correctors().nonZeros(),
                     space.coefficient_hash());
  }
  return s;
}

std::string plot_data_csv(const std::filesystem::path& dir) {
  std::string s = "study,method,H,quantity,value\n";
  bool any = false;
  const auto strong = dir / "strong_error.csv";
  if (std::filesystem::exists(strong)) {
    any = true;
    const auto rows = read_csv(strong);
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const auto& r = rows[i];
      if (r.size() != 6) throw Error("malformed strong_error.csv");
      s += fmt::format("strong,LOD,{},error,{}\n", r[0], r[3]);
      s += fmt::format("strong,LOD,{},stderr,{}\n", r[0], r[4]);
      s += fmt::format("strong,FEM,{},error,{}\n", r[0], r[5]);
    }
  }
  const auto weak = dir / "weak_error.csv";
  if (std::filesystem::exists(weak)) {
    any = true;
    const auto rows = read_csv(weak);
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const auto& r = rows[i];
      if (r.size() != 4) throw Error("malformed weak_error.csv");
      s += fmt::format("weak,{},{},error,{}\n", r[0], r[1], r[3]);
      s += fmt::format("weak,{},{},samples,{}\n", r[0], r[1], r[2]);
    }
  }
  const auto timing = dir / "timing.csv";
  if (std::filesystem::exists(timing)) {
    any = true;
    const auto rows = read_csv(timing);
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const auto& r = rows[i];
      if (r.size() != 4) throw Error("malformed timing.csv");
      s += fmt::format("timing,{},{},offline_seconds,{}\n", r[0], r[1], r[2]);
      s += fmt::format("timing,{},{},projected_seconds,{}\n", r[0], r[1], r[3]);
    }
  }
  if (!any) {
    throw Error(fmt::format("no study CSV found in '{}'", dir.string()));
  }
  return s;
}

void write_text(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
  out << content;
  if (!out) throw Error(fmt::format("failed writing '{}'", path.string()));
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot read '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string manifest_text(const ExperimentConfig& config,
                          const std::string& command) {
  return fmt::format(
      "lodspde 0.1.0\ncommand {}\nconfig_hash {:016x}\nmaster_seed {}\n"
      "coefficient_seed {}\nprovenance lodspde-0.1.0+cfg.{:016x}\n\n{}",
      command, config.hash(), config.master_seed, coefficient_seed(config),
      config.hash(), config.to_text());
}

}  // namespace lodspde
