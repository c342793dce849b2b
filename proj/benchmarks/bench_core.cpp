#include <benchmark/benchmark.h>

#include <random>

#include "optgrowth/config.hpp"
#include "optgrowth/evolution.hpp"
#include "optgrowth/solver.hpp"

using namespace optgrowth;

namespace {

Scenario perimeter_at(double h) {
  Scenario sc = preset("perimeter");
  sc.target_h = h;
  return sc;
}

GrowthField random_growth(Index ne, double scale, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-scale, scale);
  Vector v(3 * ne);
  for (Index i = 0; i < v.size(); ++i) v[i] = d(rng);
  return GrowthField(v);
}

// arg = 1000 * target_h
void BM_Assemble(benchmark::State& state) {
  const Scenario sc = perimeter_at(state.range(0) / 1000.0);
  for (auto _ : state) benchmark::DoNotOptimize(build_system(sc));
}
BENCHMARK(BM_Assemble)->Arg(100)->Arg(40)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_EquilibriumSolve(benchmark::State& state) {
  const auto sys = build_system(perimeter_at(state.range(0) / 1000.0));
  const GrowthField g = random_growth(sys.num_elements(), 0.01, 1);
  for (auto _ : state) benchmark::DoNotOptimize(solve_equilibrium(sys, g));
  state.counters["elements"] = static_cast<double>(sys.num_elements());
}
BENCHMARK(BM_EquilibriumSolve)->Arg(100)->Arg(40)->Arg(20)->Unit(benchmark::kMicrosecond);

void BM_PerimeterGradient(benchmark::State& state) {
  const auto sys = build_system(perimeter_at(state.range(0) / 1000.0));
  const Objective obj(ObjectiveKind::perimeter);
  const GrowthField g = random_growth(sys.num_elements(), 0.01, 2);
  for (auto _ : state) benchmark::DoNotOptimize(obj.reduced_gradient(sys, g));
}
BENCHMARK(BM_PerimeterGradient)->Arg(100)->Arg(40)->Arg(20)->Unit(benchmark::kMicrosecond);

// arg 0: global balance, 1: local
void BM_FeasibleProjection(benchmark::State& state) {
  const auto sys = build_system(perimeter_at(0.0395));
  MassBalance b;
  b.mode = state.range(0) ? BalanceMode::local : BalanceMode::global;
  b.gamma = 0.024;
  const GrowthField z = random_growth(sys.num_elements(), 0.05, 3);
  for (auto _ : state) benchmark::DoNotOptimize(project_feasible_increment(z, b, sys));
}
BENCHMARK(BM_FeasibleProjection)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

void BM_DykstraProjection(benchmark::State& state) {
  const auto sys = build_system(perimeter_at(0.0395));
  MassBalance b;
  b.gamma = 0.024;
  const GrowthField z = random_growth(sys.num_elements(), 0.05, 3);
  for (auto _ : state) benchmark::DoNotOptimize(project_feasible_increment_dykstra(z, b, sys, ShearWeight::engineering, 5000));
}
BENCHMARK(BM_DykstraProjection)->Unit(benchmark::kMillisecond);

// arg 0: analytic, 1: numerical
void BM_ClampedStep(benchmark::State& state) {
  Scenario sc = preset("doubly_clamped");
  sc.solver.path = state.range(0) ? SolverPath::numerical : SolverPath::analytic;
  const auto sys = build_system(sc);
  const Objective obj(sc.objective);
  const GrowthField g0(sys.num_elements());
  for (auto _ : state) benchmark::DoNotOptimize(solve_step(sys, g0, obj, sc.balance, sc.solver));
}
BENCHMARK(BM_ClampedStep)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

void BM_PerimeterStep(benchmark::State& state) {
  Scenario sc = preset("perimeter");
  sc.solver.path = state.range(0) ? SolverPath::numerical : SolverPath::analytic;
  const auto sys = build_system(sc);
  const Objective obj(sc.objective);
  const GrowthField g0(sys.num_elements());
  for (auto _ : state) benchmark::DoNotOptimize(solve_step(sys, g0, obj, sc.balance, sc.solver));
}
BENCHMARK(BM_PerimeterStep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_PerimeterRun50(benchmark::State& state) {
  Scenario sc = preset("perimeter");
  sc.n_iter = 50;
  const auto sys = build_system(sc);
  for (auto _ : state) benchmark::DoNotOptimize(run(sc, sys));
}
BENCHMARK(BM_PerimeterRun50)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
