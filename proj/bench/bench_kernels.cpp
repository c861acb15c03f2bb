#include <benchmark/benchmark.h>

#include "calib/estimator.hpp"
#include "calib/inference.hpp"
#include "calib/parallel.hpp"
#include "calib/simulate.hpp"

using namespace calib;

namespace {

TopKView setting3_view(std::size_t n) {
  Rng rng = make_rng(1, {n});
  return topk_project(gen_setting3(n, 0.05, rng), 2);
}

const PartitionSpec kSpec = PartitionSpec::make(10, 2, 20);

void BM_BinStatsSerial(benchmark::State& state) {
  const auto view = setting3_view(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(bin_stats_serial(view, kSpec));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_BinStatsParallel(benchmark::State& state) {
  const auto view = setting3_view(static_cast<std::size_t>(state.range(0)));
  set_threads(static_cast<int>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(bin_stats(view, kSpec));
  state.SetItemsProcessed(state.iterations() * state.range(0));
  set_threads(max_threads());
}

void BM_TcalNull(benchmark::State& state) {
  const auto view = setting3_view(1000);
  set_threads(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(tcal_null_statistics(view, kSpec, 200, 3));
  set_threads(max_threads());
}

void BM_ReplicationLoop(benchmark::State& state) {
  ExperimentConfig cfg;
  cfg.setting = 1;
  cfg.betas = {0.5};
  cfg.reps = 64;
  cfg.methods = {Method::adjusted, Method::hulc};
  set_threads(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(run_experiment(cfg));
  set_threads(max_threads());
}

}  // namespace

BENCHMARK(BM_BinStatsSerial)->Arg(10000)->Arg(1000000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BinStatsParallel)
    ->ArgsProduct({{10000, 1000000}, {1, 2, 4, 8}})
    ->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TcalNull)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ReplicationLoop)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
