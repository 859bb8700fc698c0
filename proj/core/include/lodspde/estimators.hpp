#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "lodspde/fem.hpp"
#include "lodspde/parallel.hpp"
#include "lodspde/timestepper.hpp"

namespace lodspde {

struct LevelAllocation {
  int level = 0;
  int coarse_exponent = 0;
  std::int64_t samples = 0;
};

/// MLMC sample counts on the grid H_j = 2^-(j+1):
///   M_0 = ceil(gamma H_J^-4),  M_j = ceil(M_0 H_j^4 2^(2 delta j)),
/// each at least 1.
struct SampleAllocation {
  double gamma = 0.01;
  double delta = 1.0;
  std::vector<LevelAllocation> levels;

  static SampleAllocation mlmc(double gamma, double delta, int finest_level);
  int finest_level() const { return static_cast<int>(levels.size()) - 1; }
  std::int64_t total_samples() const;
};

/// ceil(gamma H^-4) with H = 2^-coarse_exponent, at least 1.
std::int64_t mc_samples(double gamma, int coarse_exponent);

struct LevelReport {
  int level = 0;
  int coarse_exponent = 0;
  std::int64_t samples = 0;
  double wall_seconds = 0.0;
  /// Sample variance of the level term, in L2(D).
  double variance = 0.0;
  /// Mean of the level term as a fine interior function.
  FieldVector mean;
};

struct EstimatorReport {
  /// Estimate of E[g(X^N)] as a fine interior function.
  FieldVector estimate;
  /// sqrt(sum_j Var_j / M_j), the L2(D) standard error.
  double statistical_error = 0.0;
  std::vector<LevelReport> levels;
  /// Sum over levels of samples x steps x (dimension of the solved systems).
  double work_units = 0.0;
  double wall_seconds = 0.0;
};

/// A pure map of the final fine state; identity when empty.
using FinalStateMap = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct McOptions {
  /// Noise sample index of each draw; defaults to 0..M-1.
  std::optional<std::vector<std::uint64_t>> sample_indices;
  FinalStateMap g;
  /// Gram matrix on the fine space, needed for variances with a custom g.
  const SparseOperator* fine_mass = nullptr;
};

/// E_M[g(X^N)] with sample m driven by sample_path(noise, seed, m).
EstimatorReport mc_estimate(const Stepper& stepper, std::int64_t samples,
                            std::uint64_t seed,
                            const Parallelism& parallelism = {},
                            const McOptions& options = {});

/// Telescoping estimator over steppers ordered coarse to fine. Within level
/// j >= 1 the pair (X_j, X_{j-1}) shares one noise path; levels draw from
/// independent streams derive_seed(seed, j).
EstimatorReport mlmc_estimate(const std::vector<const Stepper*>& hierarchy,
                              const SampleAllocation& allocation,
                              std::uint64_t seed,
                              const SparseOperator& fine_mass,
                              const Parallelism& parallelism = {});

/// Welford accumulator for vectors under a Gram inner product. Blocks merge
/// with Chan's formula, so a fixed block structure yields results that do
/// not depend on the number of workers.
class MomentAccumulator {
 public:
  MomentAccumulator() = default;
  explicit MomentAccumulator(Eigen::Index dimension);

  void add(const Eigen::VectorXd& x, const SparseMatrix& gram);
  void merge(const MomentAccumulator& other, const SparseMatrix& gram);

  std::int64_t count() const noexcept { return count_; }
  const Eigen::VectorXd& mean() const noexcept { return mean_; }
  /// Unbiased variance; 0 for fewer than two samples.
  double variance() const noexcept {
    return count_ > 1 ? m2_ / static_cast<double>(count_ - 1) : 0.0;
  }

 private:
  std::int64_t count_ = 0;
  Eigen::VectorXd mean_;
  double m2_ = 0.0;
};

/// Scalar mean and standard error of a sample (M - 1 denominator; zero
/// error for one sample).
struct ScalarSummary {
  double mean = 0.0;
  double standard_error = 0.0;
};
ScalarSummary summarize(const std::vector<double>& values);

}  // namespace lodspde
