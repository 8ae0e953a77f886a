#include <benchmark/benchmark.h>

#include "efhc/learning.hpp"

namespace {

void BM_StochasticGradient(benchmark::State& state) {
  efhc::TaskSpec task{efhc::TaskKind::Hinge, 64, 10, 1e-4};
  auto [train, test] = efhc::make_synthetic_classification(10, 64, 100, 1.0, 3);
  efhc::Vec w(static_cast<std::size_t>(task.dim()), 0.01);
  efhc::Rng rng(5);
  const int batch = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto g = efhc::stochastic_gradient(task, w, train, batch, rng);
    benchmark::DoNotOptimize(g.data());
  }
}
BENCHMARK(BM_StochasticGradient)->Arg(16)->Arg(64);

void BM_Accuracy(benchmark::State& state) {
  efhc::TaskSpec task{efhc::TaskKind::Hinge, 64, 10, 1e-4};
  auto [train, test] = efhc::make_synthetic_classification(10, 64, 100, 1.0, 3);
  efhc::Vec w(static_cast<std::size_t>(task.dim()), 0.01);
  for (auto _ : state) {
    benchmark::DoNotOptimize(efhc::accuracy(task, w, test));
  }
}
BENCHMARK(BM_Accuracy);

}  // namespace
