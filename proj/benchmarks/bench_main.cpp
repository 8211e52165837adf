#include <benchmark/benchmark.h>

#include <random>

#include "dualfeed/engine.hpp"
#include "dualfeed/index_table.hpp"
#include "dualfeed/tree_optimizer.hpp"
#include "oracles.hpp"

using namespace dualfeed;

namespace {

// Poisson joins at ten per tick, no churn.
void BM_EngineJoin(benchmark::State& state) {
  ScenarioConfig c;
  c.node_count = static_cast<std::uint32_t>(state.range(0));
  c.arrival_process = ArrivalProcess::Poisson;
  c.arrival_rate = 10;
  c.horizon = static_cast<Tick>(c.node_count / 10 + 100);
  std::uint64_t events = 0;
  for (auto _ : state) {
    const RunResult r = run_scenario(c);
    events = r.stats.events;
    benchmark::DoNotOptimize(r.topology.nodes.size());
  }
  state.counters["events"] = static_cast<double>(events);
  state.counters["events/s"] =
      benchmark::Counter(static_cast<double>(events) * static_cast<double>(state.iterations()),
                         benchmark::Counter::kIsRate);
}
BENCHMARK(BM_EngineJoin)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);

void BM_OptimizerRound(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const auto size = static_cast<std::uint32_t>(state.range(0));
  for (auto _ : state) {
    state.PauseTiming();
    FeedTree tree = oracle::random_tree(rng, size, 3, 1);
    state.ResumeTiming();
    benchmark::DoNotOptimize(optimize_round(tree, exact_cc(tree), OptimizerLimits{3, 1}).size());
  }
}
BENCHMARK(BM_OptimizerRound)->Arg(200)->Arg(2000)->Unit(benchmark::kMicrosecond);

void BM_IndexQuery(benchmark::State& state) {
  const auto n = static_cast<std::uint32_t>(state.range(0));
  IndexTable index(kSourceId, IndexConfig{3, 1, 1'000'000, false});
  index.set_source_out_degree(FeedId::F1, 1);
  index.set_source_out_degree(FeedId::F2, 1);
  std::mt19937_64 rng(2);
  for (std::uint32_t i = 1; i <= n; ++i) {
    PeerRecord r;
    r.peer_id = NodeId{i};
    r.willing_feed = i % 2 ? FeedId::F1 : FeedId::F2;
    r.out_degree = static_cast<std::uint32_t>(rng() % 4);
    r.parent_f1 = NodeId{i - 1};
    r.parent_f2 = NodeId{i - 1};
    index.publish(r, i);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(index.query_best_source(FeedId::F1, NodeId{n + 1}, n));
  }
}
BENCHMARK(BM_IndexQuery)->Arg(1000)->Arg(100000);

}  // namespace

BENCHMARK_MAIN();
