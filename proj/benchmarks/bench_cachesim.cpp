#include <benchmark/benchmark.h>

#include "apxpart/cachesim.hpp"
#include "apxpart/rng.hpp"
#include "apxpart/trace.hpp"

namespace {

apxpart::Trace random_trace(std::size_t n, std::uint64_t span, std::uint64_t seed) {
  apxpart::Rng rng(seed);
  apxpart::Trace t;
  t.accesses.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    apxpart::MemoryAccess a;
    a.seq = i;
    a.instr = apxpart::InstrId{rng.uniform_below(8)};
    a.vaddr = rng.uniform_below(span) & ~std::uint64_t{7};
    a.size = 8;
    t.accesses.push_back(a);
  }
  return t;
}

void BM_SimulateLlc(benchmark::State& state) {
  const auto trace = random_trace(static_cast<std::size_t>(state.range(0)), 64ull << 20, 1);
  const apxpart::CacheConfig config{64, 16384, 11};
  for (auto _ : state) {
    benchmark::DoNotOptimize(apxpart::simulate(trace, config));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SimulateLlc)->Arg(1 << 14)->Arg(1 << 18);

void BM_SimulateWays(benchmark::State& state) {
  const auto trace = random_trace(1 << 16, 1 << 20, 2);
  const apxpart::CacheConfig config{64, 64, static_cast<std::uint64_t>(state.range(0))};
  for (auto _ : state) {
    benchmark::DoNotOptimize(apxpart::simulate(trace, config));
  }
  state.SetItemsProcessed(state.iterations() * (1 << 16));
}
BENCHMARK(BM_SimulateWays)->RangeMultiplier(2)->Range(1, 32);

}  // namespace
