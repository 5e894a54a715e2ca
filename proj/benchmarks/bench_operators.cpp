#include <benchmark/benchmark.h>

#include "fracmg/control.hpp"
#include "fracmg/precond.hpp"

using namespace fracmg;

namespace {

Vector ramp(Index n) { return Vector::LinSpaced(n, -1.0, 1.0); }

// args: dim, level
void BM_ApplyK(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  const int j = static_cast<int>(state.range(1));
  const MeshHierarchy h = build_hierarchy(dim, j, j);
  const FractionalSolveOp k(h.level_ptr(j), 0.5);
  const Vector z = ramp(h.level(j).mesh().n_nodes());
  for (auto _ : state) benchmark::DoNotOptimize(k.apply(z));
  state.SetLabel(k.backend() == ShiftedSolveBackend::spectral ? "spectral" : "direct");
}
BENCHMARK(BM_ApplyK)->Args({1, 8})->Args({1, 12})->Args({2, 5})->Args({2, 6})->Unit(benchmark::kMillisecond);

void BM_ApplyH(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  const int j = static_cast<int>(state.range(1));
  const MeshHierarchy h = build_hierarchy(dim, j, j);
  auto level = h.level_ptr(j);
  const HessianOp hess(level, std::make_shared<const FractionalSolveOp>(level, 0.5), 1e-3);
  const Vector z = ramp(level->mesh().n_nodes());
  for (auto _ : state) benchmark::DoNotOptimize(hess.apply(z));
}
BENCHMARK(BM_ApplyH)->Args({1, 10})->Args({2, 5})->Args({2, 6})->Unit(benchmark::kMillisecond);

// multigrid G^{-1} on 2D level j with base 4
void BM_MultigridInverse(benchmark::State& state) {
  const int j = static_cast<int>(state.range(0));
  const MeshHierarchy h = build_hierarchy(2, 4, j);
  MultigridOptions opts;
  opts.j_base = 4;
  const MultigridPrecond mg = build_mg(h, 0.5, 1e-2, opts);
  const Vector r = ramp(h.level(j).mesh().n_nodes());
  for (auto _ : state) benchmark::DoNotOptimize(mg.apply_inverse(r));
}
BENCHMARK(BM_MultigridInverse)->Arg(5)->Arg(6)->Unit(benchmark::kMillisecond);

void BM_QuadratureRule(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(quad_params(0.3, 1.0 / 1024.0));
}
BENCHMARK(BM_QuadratureRule);

}  // namespace
BENCHMARK_MAIN();
