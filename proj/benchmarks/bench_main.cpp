#include <benchmark/benchmark.h>

#include <vector>

#include "fractalmix/fractal.hpp"
#include "fractalmix/lamplighter.hpp"
#include "fractalmix/linalg.hpp"
#include "fractalmix/resistance.hpp"
#include "fractalmix/walk.hpp"

using namespace fractalmix;

namespace {

const WeightedGraph& gasket(int level) {
  static std::vector<WeightedGraph> cache;
  static std::vector<int> levels;
  for (std::size_t i = 0; i < levels.size(); ++i)
    if (levels[i] == level) return cache[i];
  levels.push_back(level);
  cache.push_back(build_gasket({level, 2}));
  return cache.back();
}

void BM_WalkSteps(benchmark::State& state) {
  const auto& g = gasket(static_cast<int>(state.range(0)));
  const WalkKernel k(g, false);
  CounterRng rng = make_stream(1, 0);
  Vertex x = 0;
  for (auto _ : state) {
    for (int i = 0; i < 1024; ++i) x = k.step(x, rng);
    benchmark::DoNotOptimize(x);
  }
  state.SetItemsProcessed(state.iterations() * 1024);
}
BENCHMARK(BM_WalkSteps)->Arg(5)->Arg(8);

void BM_CoverTime(benchmark::State& state) {
  const auto& g = gasket(static_cast<int>(state.range(0)));
  const WalkKernel k(g, true);
  std::uint64_t i = 0;
  for (auto _ : state) {
    CounterRng rng = make_stream(7, i++);
    benchmark::DoNotOptimize(sample_cover_time(k, 0, rng));
  }
}
BENCHMARK(BM_CoverTime)->Arg(3)->Arg(5);

void BM_CgSolve(benchmark::State& state) {
  const auto& g = gasket(static_cast<int>(state.range(0)));
  const LaplacianSystem sys(g);
  SolverOptions opt;
  opt.dense_cap = 0;  // force the iterative path
  for (auto _ : state) {
    const Vertex a[] = {0}, b[] = {1};
    benchmark::DoNotOptimize(effective_resistance(sys, a, b, opt));
  }
}
BENCHMARK(BM_CgSolve)->Arg(6)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_HeatStep(benchmark::State& state) {
  const auto& g = gasket(static_cast<int>(state.range(0)));
  const WalkKernel k(g, true);
  std::vector<double> a(g.vertex_count(), 1.0 / static_cast<double>(g.vertex_count())), b(a.size());
  for (auto _ : state) {
    k.apply(a, b);
    std::swap(a, b);
    benchmark::DoNotOptimize(a.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(g.vertex_count()));
}
BENCHMARK(BM_HeatStep)->Arg(6)->Arg(9);

void BM_WreathStep(benchmark::State& state) {
  const auto g = build_baseline({BaselineKind::cycle, static_cast<std::size_t>(state.range(0)), 2, 3});
  const WalkKernel k(g, true);
  const WreathChain chain(k);
  std::vector<double> a(chain.state_count(), 0.0), b(a.size());
  a[0] = 1.0;
  for (auto _ : state) {
    chain.apply(a, b);
    std::swap(a, b);
    benchmark::DoNotOptimize(a.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(chain.state_count()));
}
BENCHMARK(BM_WreathStep)->Arg(8)->Arg(14);

void BM_CollapsedSample(benchmark::State& state) {
  const auto& g = gasket(static_cast<int>(state.range(0)));
  const WalkKernel k(g, true);
  std::uint64_t i = 0;
  for (auto _ : state) {
    CounterRng rng = make_stream(3, i++);
    benchmark::DoNotOptimize(collapsed_sample(k, 0, 2000, rng).visited_count);
  }
}
BENCHMARK(BM_CollapsedSample)->Arg(4)->Arg(6);

}  // namespace
BENCHMARK_MAIN();
