#include <benchmark/benchmark.h>

#include "apxpart/affinity.hpp"
#include "apxpart/rng.hpp"

namespace {

void BM_Affinity(benchmark::State& state) {
  const auto members = static_cast<std::uint64_t>(state.range(0));
  apxpart::Rng rng(3);
  apxpart::Trace t;
  for (std::size_t i = 0; i < (1u << 16); ++i) {
    apxpart::MemoryAccess a;
    a.seq = i;
    a.label = apxpart::Label{"s", "m" + std::to_string(rng.uniform_below(members))};
    t.accesses.push_back(a);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(apxpart::compute_affinity(t, "s", 4));
  }
  state.SetItemsProcessed(state.iterations() * (1 << 16));
}
BENCHMARK(BM_Affinity)->Arg(4)->Arg(16)->Arg(64);

}  // namespace
