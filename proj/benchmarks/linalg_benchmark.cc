#include <benchmark/benchmark.h>

#include <Eigen/Dense>
#include <random>

#include "hinfsparse/lti.h"
#include "hinfsparse/power_method.h"
#include "hinfsparse/sparsify_greedy.h"

namespace hinfsparse {
namespace {

using Eigen::MatrixXd;

MatrixXd RandomSpd(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  MatrixXd G(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) G(i, j) = normal(rng);
  }
  return G * G.transpose() / n + MatrixXd::Identity(n, n);
}

void BM_WoodburyUpdate(benchmark::State& state) {
  const int half = static_cast<int>(state.range(0));
  std::mt19937_64 rng(1);
  const MatrixXd Einv = RandomSpd(2 * half, rng).inverse();
  const RankTwoUpdate u = RankTwoUpdate::Eliminate(half, half, 0, half - 1, 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(ApplyUpdate(Einv, u));
}
BENCHMARK(BM_WoodburyUpdate)->Arg(10)->Arg(30)->Arg(60);

void BM_DenseInverse(benchmark::State& state) {
  const int half = static_cast<int>(state.range(0));
  std::mt19937_64 rng(1);
  const MatrixXd E = RandomSpd(2 * half, rng);
  for (auto _ : state) benchmark::DoNotOptimize(MatrixXd(E.inverse()));
}
BENCHMARK(BM_DenseInverse)->Arg(10)->Arg(30)->Arg(60);

void BM_PowerMaxEig(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const MatrixXd A = RandomSpd(static_cast<int>(state.range(0)), rng);
  for (auto _ : state) benchmark::DoNotOptimize(PowerMaxEig(A).value);
}
BENCHMARK(BM_PowerMaxEig)->Arg(20)->Arg(60)->Arg(120);

void BM_HinfNorm(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(3);
  ClosedLoopSystem cl;
  cl.Acl = -RandomSpd(n, rng);
  cl.Bcl = MatrixXd::Identity(n, n);
  cl.Ccl = MatrixXd::Identity(n, n);
  cl.Dcl = MatrixXd::Zero(n, n);
  for (auto _ : state) benchmark::DoNotOptimize(HinfNorm(cl).value);
}
BENCHMARK(BM_HinfNorm)->Arg(10)->Arg(30)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace hinfsparse

BENCHMARK_MAIN();
