#include <benchmark/benchmark.h>

#include "rsreg/datagen.hpp"
#include "rsreg/filter.hpp"
#include "rsreg/huber.hpp"
#include "rsreg/preprocess.hpp"
#include "rsreg/relaxation.hpp"

using namespace rsreg;

namespace {

RegressionInstance attacked(Index n, Index d, int k) {
  datagen::InstanceSpec s;
  s.n = n;
  s.k = k;
  s.design.d = d;
  datagen::LeverageAttack la;
  la.magnitude_scale = 4.0;
  s.adversary = {la, 0.1};
  s.seed = 1;
  return datagen::make_instance(s);
}

void BM_HuberMinimize(benchmark::State& state) {
  const auto inst = attacked(state.range(0), state.range(1), 5);
  HuberProblem p{inst.design, inst.response, WeightVector::uniform(inst.n()), 0.1, 2.0};
  for (auto _ : state) benchmark::DoNotOptimize(minimize(p).first);
}
BENCHMARK(BM_HuberMinimize)->Args({500, 50})->Args({2000, 200})->Unit(benchmark::kMillisecond);

void BM_BasicRelaxation(benchmark::State& state) {
  const Index d = state.range(0);
  datagen::DesignSpec ds;
  ds.d = d;
  const Matrix x = datagen::sample_design(ds, 10 * d, 2);
  const auto sys = build_elastic(d, 20.0, 2);
  RelaxationBackend be;
  for (auto _ : state) benchmark::DoNotOptimize(solve_max_moment(x, WeightVector::uniform(x.rows()), 1, sys, be));
}
BENCHMARK(BM_BasicRelaxation)->Arg(20)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_LiteRelaxation(benchmark::State& state) {
  const Index d = state.range(0);
  datagen::DesignSpec ds;
  ds.d = d;
  const Matrix x = datagen::sample_design(ds, 20 * d, 3);
  const auto sys = build_elastic(d, 3.0, 2);
  RelaxationBackend be;
  be.kind = BackendKind::lite_quartic_t2;
  for (auto _ : state) benchmark::DoNotOptimize(solve_max_moment(x, WeightVector::uniform(x.rows()), 2, sys, be));
}
BENCHMARK(BM_LiteRelaxation)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_Filter(benchmark::State& state) {
  const auto inst = attacked(500, state.range(0), 5);
  FilterConfig cfg;
  cfg.K = 20.0;
  cfg.c_threshold = 2.0;
  cfg.a2t_threshold = 8.0;
  for (auto _ : state) benchmark::DoNotOptimize(run_filter(inst.design, cfg).first);
}
BENCHMARK(BM_Filter)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_MedianOfMeans(benchmark::State& state) {
  datagen::DesignSpec ds;
  ds.d = 100;
  const Matrix x = datagen::sample_design(ds, state.range(0), 4);
  const int blocks = default_mom_blocks(x.rows(), 0.05);
  for (auto _ : state) benchmark::DoNotOptimize(mom_covnorm_estimate(x, blocks, 1.0));
}
BENCHMARK(BM_MedianOfMeans)->Arg(1000)->Arg(10000)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
