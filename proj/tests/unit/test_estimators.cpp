#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "lodspde/errors.hpp"
#include "lodspde/estimators.hpp"
#include "lodspde/random.hpp"
#include "support/oracles.hpp"

using namespace lodspde;

namespace {

EvolutionProblem small_problem(double amplitude, int steps = 10) {
  NoiseModel n;
  n.amplitude = amplitude;
  n.decay = 0.01;
  n.truncation = 2;
  EvolutionProblem p = EvolutionProblem::standard(n);
  p.final_time = 0.1;
  p.steps = steps;
  p.noise.steps = steps;
  p.noise.timestep = p.timestep();
  return p;
}

// Hierarchy p_H = 1, 2 on p_h = 4; the spaces outlive the steppers.
struct Hierarchy {
  explicit Hierarchy(double amplitude)
      : fine(build_uniform_mesh(4)),
        a(lodspde::testing::random_field(3, 0.1, 10.0, 21)),
        s(assemble_stiffness(fine, a)),
        m(assemble_mass(fine)),
        problem(small_problem(amplitude)) {
    for (int pc = 1; pc <= 2; ++pc) {
      spaces.push_back(build_multiscale_space(make_level_pair(pc, 4), a, s, m, pc));
    }
    for (const auto& space : spaces) steppers.emplace_back(problem, space, m);
  }
  std::vector<const Stepper*> pointers() const {
    std::vector<const Stepper*> out;
    for (const auto& st : steppers) out.push_back(&st);
    return out;
  }
  Mesh fine;
  CoefficientField a;
  SparseOperator s;
  SparseOperator m;
  EvolutionProblem problem;
  std::vector<MultiscaleSpace> spaces;
  std::vector<Stepper> steppers;
};

double m_norm(const SparseOperator& m, const Eigen::VectorXd& v) {
  return std::sqrt(quadratic_form(m.matrix, v));
}

}  // namespace

TEST(Allocation, ClosedForms) {
  const SampleAllocation a = SampleAllocation::mlmc(0.01, 1.0, 3);
  ASSERT_EQ(a.levels.size(), 4u);
  EXPECT_EQ(a.levels[0].samples, 656);
  EXPECT_EQ(a.finest_level(), 3);
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> g(0.001, 0.1), d(0.25, 2.0);
  std::uniform_int_distribution<int> jj(0, 6);
  for (int trial = 0; trial < 20; ++trial) {
    const double gamma = g(rng), delta = d(rng);
    const int J = jj(rng);
    const SampleAllocation s = SampleAllocation::mlmc(gamma, delta, J);
    const double hj = std::pow(2.0, -(J + 1));
    const auto m0 = static_cast<std::int64_t>(std::ceil(gamma * std::pow(hj, -4)));
    EXPECT_EQ(s.levels[0].samples, std::max<std::int64_t>(1, m0));
    std::int64_t total = s.levels[0].samples;
    for (int j = 1; j <= J; ++j) {
      const double h = std::pow(2.0, -(j + 1));
      const auto mj = static_cast<std::int64_t>(
          std::ceil(static_cast<double>(s.levels[0].samples) * std::pow(h, 4) *
                    std::pow(2.0, 2.0 * delta * j)));
      EXPECT_EQ(s.levels[j].samples, std::max<std::int64_t>(1, mj));
      EXPECT_EQ(s.levels[j].coarse_exponent, j + 1);
      total += s.levels[j].samples;
    }
    EXPECT_EQ(s.total_samples(), total);
  }
  EXPECT_THROW(SampleAllocation::mlmc(0.0, 1.0, 2), InvalidArgument);
  EXPECT_THROW(SampleAllocation::mlmc(0.01, 1.0, -1), InvalidArgument);
  EXPECT_EQ(mc_samples(0.01, 3), 41);
  EXPECT_EQ(mc_samples(0.01, 1), 1);
}

TEST(McEstimate, IdenticalPathsGiveOneTrajectory) {
  const Hierarchy h(1.0);
  McOptions opts;
  opts.sample_indices = std::vector<std::uint64_t>{5, 5, 5};
  const EstimatorReport r = mc_estimate(h.steppers[1], 3, 9, {}, opts);
  const NoisePath path = sample_path(h.problem.noise, 9, 5);
  const Eigen::VectorXd single = h.steppers[1].run(&path).fine_state.values;
  EXPECT_LE((r.estimate.values - single).lpNorm<Eigen::Infinity>(),
            1e-14 * single.lpNorm<Eigen::Infinity>());
  EXPECT_LE(r.statistical_error, 1e-12);
}

TEST(McEstimate, ZeroNoiseEqualsReference) {
  const Hierarchy h(0.0);
  const Stepper fine(h.problem, h.fine, h.s, h.m);
  const Eigen::VectorXd ref =
      run_expectation_reference(h.problem, h.fine, h.s, h.m).final_state.values;
  for (std::int64_t samples : {1, 4, 7}) {
    const EstimatorReport r = mc_estimate(fine, samples, 3);
    EXPECT_LE((r.estimate.values - ref).lpNorm<Eigen::Infinity>(), 1e-12);
    EXPECT_LE(r.statistical_error, 1e-12);
  }
}

TEST(McEstimate, RejectsEmptySample) {
  const Hierarchy h(1.0);
  EXPECT_THROW(mc_estimate(h.steppers[0], 0, 1), InvalidArgument);
}

TEST(McEstimate, StatisticalErrorScalesAsInverseRoot) {
  const Hierarchy h(1.0);
  const Stepper& st = h.steppers[1];
  std::vector<double> x;
  std::vector<double> y;
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    for (std::int64_t samples : {25, 100, 400}) {
      const EstimatorReport r = mc_estimate(st, samples, derive_seed(1234, seed));
      x.push_back(std::log(static_cast<double>(samples)));
      y.push_back(std::log(r.statistical_error));
    }
  }
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / x.size();
    my += y[i] / y.size();
  }
  double num = 0, den = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    num += (x[i] - mx) * (y[i] - my);
    den += (x[i] - mx) * (x[i] - mx);
  }
  EXPECT_NEAR(num / den, -0.5, 0.1);
}

TEST(McEstimate, IndependentOfWorkerCount) {
  const Hierarchy h(1.0);
  const EstimatorReport one = mc_estimate(h.steppers[1], 70, 4, Parallelism{1});
  const EstimatorReport four = mc_estimate(h.steppers[1], 70, 4, Parallelism{4});
  EXPECT_EQ((one.estimate.values - four.estimate.values).lpNorm<Eigen::Infinity>(), 0.0);
  EXPECT_EQ(one.statistical_error, four.statistical_error);
}

TEST(McEstimate, CustomMapUsesFineMass) {
  const Hierarchy h(1.0);
  McOptions opts;
  opts.g = [](const Eigen::VectorXd& v) { Eigen::VectorXd w = 2.0 * v; return w; };
  EXPECT_THROW(mc_estimate(h.steppers[0], 4, 1, {}, opts), InvalidArgument);
  opts.fine_mass = &h.m;
  const EstimatorReport doubled = mc_estimate(h.steppers[0], 4, 1, {}, opts);
  const EstimatorReport plain = mc_estimate(h.steppers[0], 4, 1);
  EXPECT_LE((doubled.estimate.values - 2.0 * plain.estimate.values).norm(),
            1e-12 * doubled.estimate.values.norm());
  EXPECT_NEAR(doubled.statistical_error, 2.0 * plain.statistical_error,
              1e-9 * plain.statistical_error);
}

TEST(Mlmc, SingleLevelEqualsMonteCarlo) {
  const Hierarchy h(1.0);
  SampleAllocation alloc = SampleAllocation::mlmc(0.01, 1.0, 0);
  alloc.levels[0].samples = 13;
  const EstimatorReport ml = mlmc_estimate({&h.steppers[1]}, alloc, 6, h.m);
  const EstimatorReport mc = mc_estimate(h.steppers[1], 13, derive_seed(6, 0));
  EXPECT_EQ((ml.estimate.values - mc.estimate.values).lpNorm<Eigen::Infinity>(), 0.0);
  EXPECT_NEAR(ml.statistical_error, mc.statistical_error, 1e-15);
}

TEST(Mlmc, ZeroNoiseEqualsFinestRun) {
  const Hierarchy h(0.0);
  SampleAllocation alloc = SampleAllocation::mlmc(0.01, 1.0, 1);
  alloc.levels[0].samples = 5;
  alloc.levels[1].samples = 3;
  const EstimatorReport r = mlmc_estimate(h.pointers(), alloc, 1, h.m);
  const Eigen::VectorXd finest = h.steppers[1].run(nullptr).fine_state.values;
  EXPECT_LE((r.estimate.values - finest).lpNorm<Eigen::Infinity>(), 1e-10);
}

TEST(Mlmc, TelescopingIsExact) {
  const Hierarchy h(1.0);
  SampleAllocation alloc = SampleAllocation::mlmc(0.01, 1.0, 1);
  alloc.levels[0].samples = 20;
  alloc.levels[1].samples = 6;
  const EstimatorReport r = mlmc_estimate(h.pointers(), alloc, 2, h.m);
  ASSERT_EQ(r.levels.size(), 2u);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(r.estimate.size());
  sum += r.levels[0].mean.values;
  sum += r.levels[1].mean.values;
  EXPECT_EQ((sum - r.estimate.values).lpNorm<Eigen::Infinity>(), 0.0);
  EXPECT_EQ(r.levels[0].samples, 20);
  EXPECT_EQ(r.levels[1].samples, 6);
  const double expected = std::sqrt(r.levels[0].variance / 20 + r.levels[1].variance / 6);
  EXPECT_NEAR(r.statistical_error, expected, 1e-14);
}

TEST(Mlmc, CorrectionLevelMatchesCoupledDifferences) {
  const Hierarchy h(1.0);
  SampleAllocation alloc = SampleAllocation::mlmc(0.01, 1.0, 1);
  alloc.levels[0].samples = 1;
  alloc.levels[1].samples = 4;
  const EstimatorReport r = mlmc_estimate(h.pointers(), alloc, 3, h.m);
  const std::uint64_t level_seed = derive_seed(3, 1);
  std::vector<Eigen::VectorXd> diffs;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(h.fine.num_interior());
  for (std::uint64_t i = 0; i < 4; ++i) {
    const NoisePath path = sample_path(h.problem.noise, level_seed, i);
    diffs.push_back(h.steppers[1].run(&path).fine_state.values -
                    h.steppers[0].run(&path).fine_state.values);
    mean += diffs.back() / 4.0;
  }
  EXPECT_LE((r.levels[1].mean.values - mean).norm(), 1e-12 * mean.norm());
  double var = 0.0;
  for (const auto& d : diffs) var += quadratic_form(h.m.matrix, d - mean) / 3.0;
  EXPECT_NEAR(r.levels[1].variance, var, 1e-9 * var);
  // Coupling: the correction varies far less than the level itself.
  const EstimatorReport base = mc_estimate(h.steppers[1], 4, level_seed);
  EXPECT_LT(r.levels[1].variance, 4.0 * base.statistical_error * base.statistical_error);
}

TEST(Mlmc, MismatchedHierarchy) {
  const Hierarchy h(1.0);
  const Mesh other = build_uniform_mesh(3);
  const SparseOperator s3 = assemble_stiffness(other, h.a);
  const SparseOperator m3 = assemble_mass(other);
  const Stepper foreign(h.problem, other, s3, m3);
  const SampleAllocation alloc = SampleAllocation::mlmc(0.01, 1.0, 1);
  EXPECT_THROW(mlmc_estimate({&foreign, &h.steppers[1]}, alloc, 1, h.m), InvalidArgument);
  EXPECT_THROW(mlmc_estimate({&h.steppers[1]}, alloc, 1, h.m), InvalidArgument);
}

TEST(Mlmc, IndependentOfWorkerCount) {
  const Hierarchy h(1.0);
  SampleAllocation alloc = SampleAllocation::mlmc(0.01, 1.0, 1);
  alloc.levels[0].samples = 45;
  alloc.levels[1].samples = 9;
  const EstimatorReport one = mlmc_estimate(h.pointers(), alloc, 8, h.m, Parallelism{1});
  const EstimatorReport three = mlmc_estimate(h.pointers(), alloc, 8, h.m, Parallelism{3});
  EXPECT_EQ((one.estimate.values - three.estimate.values).lpNorm<Eigen::Infinity>(), 0.0);
  EXPECT_EQ(one.statistical_error, three.statistical_error);
}

TEST(WeakVsStrong, MeanOfDifferenceBoundedByMeanNorm) {
  const Hierarchy h(1.0);
  const Stepper fine(h.problem, h.fine, h.s, h.m);
  const int samples = 12;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(h.fine.num_interior());
  double strong = 0.0;
  for (int i = 0; i < samples; ++i) {
    const NoisePath path = sample_path(h.problem.noise, 31, static_cast<std::uint64_t>(i));
    const Eigen::VectorXd d =
        fine.run(&path).fine_state.values - h.steppers[0].run(&path).fine_state.values;
    mean += d / samples;
    strong += m_norm(h.m, d) / samples;
  }
  const double weak = (mc_estimate(fine, samples, 31).estimate.values -
                       mc_estimate(h.steppers[0], samples, 31).estimate.values)
                          .norm();
  EXPECT_LE(m_norm(h.m, mean), strong);
  EXPECT_NEAR((mean).norm(), weak, 1e-10 * weak);
}

TEST(Moments, MatchesTwoPassFormulas) {
  const Eigen::Index n = 5;
  SparseMatrix gram(n, n);
  for (Eigen::Index i = 0; i < n; ++i) gram.insert(i, i) = 1.0 + i;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> d;
  std::vector<Eigen::VectorXd> xs;
  MomentAccumulator a(n), b(n), all(n);
  for (int i = 0; i < 50; ++i) {
    Eigen::VectorXd x(n);
    for (auto& v : x) v = d(rng);
    xs.push_back(x);
    (i < 17 ? a : b).add(x, gram);
    all.add(x, gram);
  }
  a.merge(b, gram);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
  for (const auto& x : xs) mean += x / 50.0;
  double var = 0.0;
  for (const auto& x : xs) var += quadratic_form(gram, x - mean) / 49.0;
  EXPECT_EQ(a.count(), 50);
  EXPECT_LE((a.mean() - mean).norm(), 1e-13);
  EXPECT_NEAR(a.variance(), var, 1e-12 * var);
  EXPECT_NEAR(all.variance(), var, 1e-12 * var);
}

TEST(Moments, ScalarSummary) {
  const ScalarSummary s = summarize({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_NEAR(s.standard_error, std::sqrt(5.0 / 3.0 / 4.0), 1e-15);
  const ScalarSummary one = summarize({7.0});
  EXPECT_EQ(one.mean, 7.0);
  EXPECT_EQ(one.standard_error, 0.0);
}
