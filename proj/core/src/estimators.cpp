#include "lodspde/estimators.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "lodspde/errors.hpp"
#include "lodspde/noise.hpp"
#include "lodspde/random.hpp"

namespace lodspde {
namespace {

using Clock = std::chrono::steady_clock;

constexpr std::size_t kBlock = 32;

double gram_form(const SparseMatrix& gram, const Eigen::VectorXd& a,
                 const Eigen::VectorXd& b) {
  return a.dot(gram * b);
}

std::int64_t ceil_count(double value) {
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(value)));
}

/// Accumulates f(i) for i in [0, n) in fixed blocks, merged in order.
MomentAccumulator accumulate(
    std::int64_t n, Eigen::Index dimension, const SparseMatrix& gram,
    const Parallelism& parallelism,
    const std::function<Eigen::VectorXd(std::int64_t)>& sample) {
  const std::size_t count = static_cast<std::size_t>(n);
  const std::size_t blocks = (count + kBlock - 1) / kBlock;
  std::vector<MomentAccumulator> partial(blocks, MomentAccumulator(dimension));
  parallel_for(parallelism, blocks, [&](std::size_t b) {
    const std::size_t end = std::min(count, (b + 1) * kBlock);
    for (std::size_t i = b * kBlock; i < end; ++i) {
      partial[b].add(sample(static_cast<std::int64_t>(i)), gram);
    }
  });
  MomentAccumulator total(dimension);
  for (const auto& p : partial) total.merge(p, gram);
  return total;
}

}  // namespace

SampleAllocation SampleAllocation::mlmc(double gamma, double delta,
                                        int finest_level) {
  if (!(gamma > 0.0) || !(delta > 0.0) || finest_level < 0) {
    throw InvalidArgument("allocation needs gamma > 0, delta > 0, J >= 0");
  }
  SampleAllocation a;
  a.gamma = gamma;
  a.delta = delta;
  const std::int64_t m0 = mc_samples(gamma, finest_level + 1);
  for (int j = 0; j <= finest_level; ++j) {
    const double h = std::pow(2.0, -(j + 1));
    const std::int64_t m =
        j == 0 ? m0
               : ceil_count(static_cast<double>(m0) * std::pow(h, 4) *
                            std::pow(2.0, 2.0 * delta * j));
    a.levels.push_back({j, j + 1, m});
  }
  return a;
}

std::int64_t SampleAllocation::total_samples() const {
  std::int64_t total = 0;
  for (const auto& l : levels) total += l.samples;
  return total;
}

std::int64_t mc_samples(double gamma, int coarse_exponent) {
  if (!(gamma > 0.0)) throw InvalidArgument("gamma must be positive");
  const double h = std::pow(2.0, -coarse_exponent);
  return ceil_count(gamma * std::pow(h, -4));
}

MomentAccumulator::MomentAccumulator(Eigen::Index dimension)
    : mean_(Eigen::VectorXd::Zero(dimension)) {}

void MomentAccumulator::add(const Eigen::VectorXd& x, const SparseMatrix& gram) {
  ++count_;
  const Eigen::VectorXd before = x - mean_;
  mean_ += before / static_cast<double>(count_);
  const Eigen::VectorXd after = x - mean_;
  m2_ += gram_form(gram, before, after);
}

void MomentAccumulator::merge(const MomentAccumulator& other,
                              const SparseMatrix& gram) {
  if (other.count_ == 0) return;
  if (count_ == 0) {
    *this = other;
    return;
  }
  const double na = static_cast<double>(count_);
  const double nb = static_cast<double>(other.count_);
  const double n = na + nb;
  const Eigen::VectorXd d = other.mean_ - mean_;
  mean_ += d * (nb / n);
  m2_ += other.m2_ + gram_form(gram, d, d) * (na * nb / n);
  count_ += other.count_;
}

ScalarSummary summarize(const std::vector<double>& values) {
  ScalarSummary s;
  if (values.empty()) return s;
  double mean = 0.0;
  double m2 = 0.0;
  std::int64_t n = 0;
  for (double v : values) {
    ++n;
    const double d = v - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (v - mean);
  }
  s.mean = mean;
  if (n > 1) {
    s.standard_error =
        std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n));
  }
  return s;
}

EstimatorReport mc_estimate(const Stepper& stepper, std::int64_t samples,
                            std::uint64_t seed, const Parallelism& parallelism,
                            const McOptions& options) {
  if (samples < 1) throw InvalidArgument("Monte Carlo needs M >= 1");
  if (options.sample_indices &&
      static_cast<std::int64_t>(options.sample_indices->size()) != samples) {
    throw InvalidArgument("sample index list does not match M");
  }
  if (options.g && options.fine_mass == nullptr) {
    throw InvalidArgument("a custom g needs the fine mass matrix");
  }
  const auto start = Clock::now();
  const NoiseModel& noise = stepper.problem().noise;
  const bool mapped = static_cast<bool>(options.g);
  const SparseMatrix& gram =
      mapped ? options.fine_mass->matrix : stepper.gram();
  const Eigen::Index dim =
      mapped ? stepper.fine_dimension() : stepper.dimension();

  auto draw = [&](std::int64_t i) -> Eigen::VectorXd {
    const std::uint64_t index = options.sample_indices
                                    ? (*options.sample_indices)[i]
                                    : static_cast<std::uint64_t>(i);
    const NoisePath path = sample_path(noise, seed, index);
    Eigen::VectorXd c;
    try {
      c = stepper.final_coefficients(&path);
    } catch (const SolverError& e) {
      throw SolverError("sample " + std::to_string(index) + ": " + e.what());
    }
    if (mapped) return options.g(stepper.to_fine(c));
    return c;
  };
  const MomentAccumulator acc =
      accumulate(samples, dim, gram, parallelism, draw);

  EstimatorReport report;
  const Eigen::VectorXd fine_mean =
      mapped ? acc.mean() : stepper.to_fine(acc.mean());
  report.estimate = {Space::FineInterior, fine_mean};
  report.statistical_error =
      std::sqrt(acc.variance() / static_cast<double>(samples));
  report.wall_seconds =
      std::chrono::duration<double>(Clock::now() - start).count();
  report.work_units = static_cast<double>(samples) * stepper.problem().steps *
                      static_cast<double>(stepper.dimension());
  LevelReport level;
  level.samples = samples;
  level.wall_seconds = report.wall_seconds;
  level.variance = acc.variance();
  level.mean = report.estimate;
  report.levels.push_back(std::move(level));
  return report;
}

EstimatorReport mlmc_estimate(const std::vector<const Stepper*>& hierarchy,
                              const SampleAllocation& allocation,
                              std::uint64_t seed,
                              const SparseOperator& fine_mass,
                              const Parallelism& parallelism) {
  if (hierarchy.empty()) throw InvalidArgument("empty MLMC hierarchy");
  if (hierarchy.size() != allocation.levels.size()) {
    throw InvalidArgument("hierarchy and allocation differ in length");
  }
  const Stepper& finest = *hierarchy.back();
  for (const Stepper* s : hierarchy) {
    if (s->fine_exponent() != finest.fine_exponent() ||
        s->fine_dimension() != finest.fine_dimension() ||
        s->fine_dimension() != fine_mass.dimension()) {
      throw InvalidArgument("MLMC levels do not share one fine mesh");
    }
  }
  const auto start = Clock::now();
  EstimatorReport report;
  report.estimate = {Space::FineInterior,
                     Eigen::VectorXd::Zero(finest.fine_dimension())};
  double variance_sum = 0.0;

  for (std::size_t j = 0; j < hierarchy.size(); ++j) {
    const auto level_start = Clock::now();
    const std::int64_t samples = allocation.levels[j].samples;
    if (samples < 1) throw InvalidArgument("level sample count below 1");
    const std::uint64_t level_seed = derive_seed(seed, j);
    const Stepper& fine = *hierarchy[j];
    const Stepper* coarse = j > 0 ? hierarchy[j - 1] : nullptr;
    const NoiseModel& noise = fine.problem().noise;

    // Coefficients of level j (and j - 1) stacked; representation
    // R = [B_j, -B_{j-1}] in the fine space, Gram R^T M_h R.
    const Eigen::Index nf = fine.dimension();
    const Eigen::Index nc = coarse ? coarse->dimension() : 0;
    SparseMatrix gram;
    if (coarse == nullptr) {
      gram = fine.gram();
    } else {
      auto rep = [](const Stepper& s) {
        if (s.basis()) return *s.basis();
        SparseMatrix id(s.fine_dimension(), s.fine_dimension());
        id.setIdentity();
        return id;
      };
      const SparseMatrix bf = rep(fine);
      const SparseMatrix bc = rep(*coarse);
      SparseMatrix r(bf.rows(), nf + nc);
      r.leftCols(nf) = bf;
      r.rightCols(nc) = -bc;
      gram = SparseMatrix(r.transpose()) * (fine_mass.matrix * r);
      gram = 0.5 * (gram + SparseMatrix(gram.transpose()));
    }

    auto draw = [&](std::int64_t i) -> Eigen::VectorXd {
      const NoisePath path =
          sample_path(noise, level_seed, static_cast<std::uint64_t>(i));
      Eigen::VectorXd x(nf + nc);
      x.head(nf) = fine.final_coefficients(&path);
      if (coarse) x.tail(nc) = coarse->final_coefficients(&path);
      return x;
    };
    const MomentAccumulator acc =
        accumulate(samples, nf + nc, gram, parallelism, draw);

    Eigen::VectorXd level_mean = fine.to_fine(acc.mean().head(nf));
    if (coarse) level_mean -= coarse->to_fine(acc.mean().tail(nc));
    report.estimate.values += level_mean;
    variance_sum += acc.variance() / static_cast<double>(samples);
    report.work_units += static_cast<double>(samples) * fine.problem().steps *
                         static_cast<double>(nf + nc);

    LevelReport level;
    level.level = static_cast<int>(j);
    level.coarse_exponent = allocation.levels[j].coarse_exponent;
    level.samples = samples;
    level.variance = acc.variance();
    level.mean = {Space::FineInterior, std::move(level_mean)};
    level.wall_seconds =
        std::chrono::duration<double>(Clock::now() - level_start).count();
    report.levels.push_back(std::move(level));
  }
  report.statistical_error = std::sqrt(variance_sum);
  report.wall_seconds =
      std::chrono::duration<double>(Clock::now() - start).count();
  return report;
}

}  // namespace lodspde
