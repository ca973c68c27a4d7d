// Parallel kernels against their serial twins.
#include <benchmark/benchmark.h>

#include <map>

#include "gridsched/anomaly.hpp"
#include "gridsched/forecasters.hpp"
#include "gridsched/report.hpp"
#include "gridsched/synth_trace.hpp"

namespace {

using namespace gridsched;

std::vector<double> series(std::size_t n, std::uint64_t seed) {
  ClassGenSpec g;
  g.n_jobs = n;
  g.seed = seed;
  g.noise = NoiseKind::ar1;
  g.phi = 0.6;
  return durations_of(gen_class_series(g));
}

void BM_lowess(benchmark::State& st) {
  const auto y = series(static_cast<std::size_t>(st.range(0)), 1);
  for (auto _ : st) benchmark::DoNotOptimize(lowess_smooth(y));
}

void BM_lowess_serial(benchmark::State& st) {
  const auto y = series(static_cast<std::size_t>(st.range(0)), 1);
  for (auto _ : st) benchmark::DoNotOptimize(lowess_smooth_serial(y));
}

void BM_select_order(benchmark::State& st) {
  const auto y = series(400, 2);
  for (auto _ : st) benchmark::DoNotOptimize(select_order(y));
}

void BM_select_order_serial(benchmark::State& st) {
  const auto y = series(400, 2);
  for (auto _ : st) benchmark::DoNotOptimize(select_order_serial(y));
}

std::vector<JobClass> classes() {
  std::vector<JobClass> out;
  for (std::uint64_t s = 0; s < 8; ++s) {
    JobClass c;
    c.key.group = "g" + std::to_string(s);
    const auto y = series(500, 10 + s);
    for (std::size_t i = 0; i < y.size(); ++i) {
      c.observations.push_back({static_cast<std::int64_t>(i), y[i], static_cast<std::int64_t>(i + 1)});
    }
    out.push_back(std::move(c));
  }
  return out;
}

void BM_replay(benchmark::State& st) {
  const auto cs = classes();
  std::vector<const JobClass*> ptrs;
  for (const auto& c : cs) ptrs.push_back(&c);
  for (auto _ : st) benchmark::DoNotOptimize(replay_classes(ptrs, ClassPipelineConfig{}));
}

void BM_replay_serial(benchmark::State& st) {
  const auto cs = classes();
  std::vector<const JobClass*> ptrs;
  for (const auto& c : cs) ptrs.push_back(&c);
  for (auto _ : st) benchmark::DoNotOptimize(replay_classes_serial(ptrs, ClassPipelineConfig{}));
}

}  // namespace

BENCHMARK(BM_lowess)->Arg(1000)->Arg(4000);
BENCHMARK(BM_lowess_serial)->Arg(1000)->Arg(4000);
BENCHMARK(BM_select_order);
BENCHMARK(BM_select_order_serial);
BENCHMARK(BM_replay)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_replay_serial)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
