#include <benchmark/benchmark.h>

#include "efhc/mixing.hpp"
#include "efhc/rng.hpp"
#include "efhc/topology.hpp"

namespace {

void BM_BuildTransitionMatrix(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const efhc::GraphSnapshot snap = efhc::generate_geometric_graph(m, 0.5, 7);
  efhc::BroadcastFlags flags;
  flags.v.assign(static_cast<std::size_t>(m), 0);
  efhc::Rng rng(42);
  for (auto& v : flags.v) v = efhc::uniform_double(rng) < 0.5 ? 1 : 0;
  for (auto _ : state) {
    auto p = efhc::build_transition_matrix(snap, flags);
    benchmark::DoNotOptimize(p.w.data());
  }
}
BENCHMARK(BM_BuildTransitionMatrix)->Arg(10)->Arg(20)->Arg(50);

void BM_VerifyTransition(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const efhc::GraphSnapshot snap = efhc::generate_geometric_graph(m, 0.5, 7);
  efhc::BroadcastFlags flags;
  flags.v.assign(static_cast<std::size_t>(m), 1);
  const auto p = efhc::build_transition_matrix(snap, flags);
  for (auto _ : state) {
    auto rep = efhc::verify_transition(p, 1.0 / m);
    benchmark::DoNotOptimize(rep.pass());
  }
}
BENCHMARK(BM_VerifyTransition)->Arg(10)->Arg(20)->Arg(50);

}  // namespace
