#include <benchmark/benchmark.h>

#include "apxpart/partition.hpp"
#include "apxpart/structdsl.hpp"
#include "apxpart/trace.hpp"

namespace {

constexpr const char* kDecl = R"(
struct tree_node {
  int id;
  struct tree_node *r;
  struct tree_node *l;
  double score;
};
)";

void BM_RemapTrace(benchmark::State& state) {
  const auto decls = apxpart::parse_decls(kDecl);
  const auto layout = apxpart::layout(*decls.find("tree_node"), decls);
  const auto n = static_cast<std::uint64_t>(state.range(0));
  apxpart::PatternSpec pattern;
  pattern.order = apxpart::RandomOrder{1};
  pattern.members = {"id", "score"};
  pattern.element_count = n;
  const auto trace = apxpart::gen_aos_trace(layout, pattern, 0x10000000);

  apxpart::PartitionPlan plan;
  plan.groups = {{"hot", {"id", "r", "l"}, "crit"}, {"cold", {"score"}, "approx"}};
  apxpart::place_regions(plan, layout, n, 0x40000000, 1 << 20);
  for (auto _ : state) {
    benchmark::DoNotOptimize(apxpart::remap_trace(trace, layout, plan, n));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(trace.accesses.size()));
}
BENCHMARK(BM_RemapTrace)->Arg(1 << 12)->Arg(1 << 16);

}  // namespace
