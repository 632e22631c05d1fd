#include <benchmark/benchmark.h>
#include <omp.h>

#include <filesystem>

#include "crn/baselines.hpp"
#include "crn/experiment.hpp"
#include "crn/netmodel.hpp"

namespace {

crn::NetworkSnapshot snapshot(std::size_t n, std::size_t w, std::size_t k) {
  crn::NetworkParams p;
  p.n_cus = n;
  p.n_aps = w;
  p.n_channels = k;
  p.noise_per_channel = 1e-2;
  p.seed = 17;
  return crn::generate_snapshot(p);
}

void BM_ExhaustiveSerial(benchmark::State& state) {
  const auto s = snapshot(state.range(0), 3, 12);
  for (auto _ : state) benchmark::DoNotOptimize(crn::exhaustive_sep_serial(s).best_sep);
}

void BM_ExhaustiveParallel(benchmark::State& state) {
  const auto s = snapshot(state.range(0), 3, 12);
  for (auto _ : state) benchmark::DoNotOptimize(crn::exhaustive_sep(s).best_sep);
}

void BM_Batch(benchmark::State& state) {
  auto cfg = crn::ExperimentConfig::from_json(nlohmann::json::parse(R"j({
    "scenario": {"n_cus": [4], "n_aps": [2], "n_channels": [8]},
    "algorithms": ["jaspa", "closest_ap"],
    "replications": 8
  })j"));
  cfg.output_dir = std::filesystem::temp_directory_path() / "crn_bench_batch";
  const int jobs = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(crn::run_experiment(cfg, jobs).runs);
}

}  // namespace

BENCHMARK(BM_ExhaustiveSerial)->Arg(4)->Arg(5)->Arg(6)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ExhaustiveParallel)->Arg(4)->Arg(5)->Arg(6)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Batch)->Arg(1)->Arg(omp_get_max_threads())->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
