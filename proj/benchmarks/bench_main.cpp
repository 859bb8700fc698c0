#include <benchmark/benchmark.h>

#include "lodspde/estimators.hpp"
#include "lodspde/lod.hpp"
#include "lodspde/random.hpp"
#include "lodspde/timestepper.hpp"

using namespace lodspde;

namespace {

CoefficientField rough(int e) {
  std::vector<double> v(static_cast<std::size_t>(1) << (2 * e));
  SplitMix64 rng(derive_seed(1, "bench"));
  for (auto& x : v) x = std::pow(10.0, 2.0 * rng.uniform() - 1.0);
  return CoefficientField(e, std::move(v));
}

EvolutionProblem problem(int kappa) {
  NoiseModel n;
  n.truncation = kappa;
  return EvolutionProblem::standard(n);
}

}  // namespace

static void BM_AssembleStiffness(benchmark::State& state) {
  const int p = static_cast<int>(state.range(0));
  const Mesh mesh = build_uniform_mesh(p);
  const CoefficientField a = rough(p - 1);
  for (auto _ : state) benchmark::DoNotOptimize(assemble_stiffness(mesh, a));
  state.SetItemsProcessed(state.iterations() * mesh.num_elements());
}
BENCHMARK(BM_AssembleStiffness)->Arg(5)->Arg(6)->Arg(7)->Unit(benchmark::kMillisecond);

static void BM_ElementCorrector(benchmark::State& state) {
  const int pc = static_cast<int>(state.range(0));
  const int ell = static_cast<int>(state.range(1));
  const LevelPair pair = make_level_pair(pc, 7);
  const CoefficientField a = rough(6);
  const SparseOperator s = assemble_stiffness(pair.fine, a);
  const CorrectorProblem cp(pair, a, s);
  // An element away from the boundary.
  const ElementId k = 2 * ((pair.coarse.cells_per_side() / 2) * pair.coarse.cells_per_side() +
                           pair.coarse.cells_per_side() / 2);
  for (auto _ : state) benchmark::DoNotOptimize(cp.solve(k, ell));
}
BENCHMARK(BM_ElementCorrector)
    ->Args({3, 1})
    ->Args({3, 2})
    ->Args({4, 2})
    ->Args({4, 3})
    ->Unit(benchmark::kMillisecond);

static void BM_FineSample(benchmark::State& state) {
  const Mesh mesh = build_uniform_mesh(static_cast<int>(state.range(0)));
  const CoefficientField a = rough(mesh.level_exponent() - 1);
  const SparseOperator s = assemble_stiffness(mesh, a);
  const SparseOperator m = assemble_mass(mesh);
  const EvolutionProblem p = problem(default_truncation(mesh.level_exponent()));
  const Stepper stepper(p, mesh, s, m);
  std::uint64_t i = 0;
  for (auto _ : state) {
    const NoisePath path = sample_path(p.noise, 1, i++);
    benchmark::DoNotOptimize(stepper.final_coefficients(&path));
  }
}
BENCHMARK(BM_FineSample)->Arg(6)->Arg(7)->Unit(benchmark::kMillisecond);

static void BM_LodSample(benchmark::State& state) {
  const int pc = static_cast<int>(state.range(0));
  const LevelPair pair = make_level_pair(pc, 7);
  const CoefficientField a = rough(6);
  const SparseOperator s = assemble_stiffness(pair.fine, a);
  const SparseOperator m = assemble_mass(pair.fine);
  const MultiscaleSpace space = build_multiscale_space(pair, a, s, m, pc);
  const EvolutionProblem p = problem(default_truncation(7));
  const Stepper stepper(p, space, m);
  std::uint64_t i = 0;
  for (auto _ : state) {
    const NoisePath path = sample_path(p.noise, 1, i++);
    benchmark::DoNotOptimize(stepper.final_coefficients(&path));
  }
}
BENCHMARK(BM_LodSample)->Arg(2)->Arg(3)->Arg(4)->Unit(benchmark::kMillisecond);

static void BM_NoisePath(benchmark::State& state) {
  NoiseModel n;
  n.truncation = static_cast<int>(state.range(0));
  std::uint64_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sample_path(n, 3, i++));
}
BENCHMARK(BM_NoisePath)->Arg(4)->Arg(8)->Arg(16);

BENCHMARK_MAIN();
