#include <benchmark/benchmark.h>

#include "efhc/engine.hpp"

namespace {

efhc::ExperimentConfig small_config(efhc::PolicyKind policy) {
  efhc::ExperimentConfig cfg;
  cfg.m = 10;
  cfg.task = efhc::TaskKind::Hinge;
  cfg.n_features = 32;
  cfg.classes = 10;
  cfg.per_class = 50;
  cfg.policy = policy;
  cfg.total_iterations = 0;
  return cfg;
}

void BM_EngineStep(benchmark::State& state) {
  const auto policy = state.range(0) == 0 ? efhc::PolicyKind::EFHC : efhc::PolicyKind::ZT;
  efhc::World world = efhc::init_world(small_config(policy));
  long k = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(efhc::step(world, k++, false).score_cum);
  }
}
BENCHMARK(BM_EngineStep)->Arg(0)->Arg(1);

}  // namespace
