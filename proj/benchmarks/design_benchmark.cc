#include <benchmark/benchmark.h>
#include <spdlog/spdlog.h>

#include <map>

#include "hinfsparse/ellipsoid.h"
#include "hinfsparse/experiments.h"
#include "hinfsparse/sparsify_greedy.h"
#include "hinfsparse/sparsify_l1.h"

namespace hinfsparse {
namespace {

// Region of a dense Gaussian plant at 1.25 × its attenuation floor.
const EllipsoidRegion& RegionFor(int n) {
  static std::map<int, EllipsoidRegion> cache;
  auto it = cache.find(n);
  if (it == cache.end()) {
    const StateSpaceSystem sys = GenDenseGaussian({.n = n, .m = n, .seed = 1});
    it = cache.emplace(n, SynthesizeRegion(sys, 1.25 * GammaFloor(sys)).region).first;
  }
  return it->second;
}

void BM_SynthesizeRegion(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const StateSpaceSystem sys = GenDenseGaussian({.n = n, .m = n, .seed = 1});
  const double gamma = RegionFor(n).gamma;
  for (auto _ : state) benchmark::DoNotOptimize(SynthesizeRegion(sys, gamma).region.F_o.sum());
}
BENCHMARK(BM_SynthesizeRegion)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_GreedyStep(benchmark::State& state) {
  const GreedyState s = InitState(RegionFor(static_cast<int>(state.range(0))), 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(Step(s, {}));
}
BENCHMARK(BM_GreedyStep)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_RunGreedy(benchmark::State& state) {
  const EllipsoidRegion& region = RegionFor(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(RunGreedy(region, {}).gain.F.sum());
}
BENCHMARK(BM_RunGreedy)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_ReweightedL1(benchmark::State& state) {
  spdlog::set_level(spdlog::level::err);
  const EllipsoidRegion& region = RegionFor(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(ReweightedL1(region, {}).gain.F.sum());
}
BENCHMARK(BM_ReweightedL1)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace hinfsparse

BENCHMARK_MAIN();
