#include <set>

#include "doctest.h"
#include "dualfeed/cli/outputs.hpp"
#include "dualfeed/cli/scenario_io.hpp"
#include "dualfeed/engine.hpp"

using namespace dualfeed;

namespace {

const NodeId S{0};

ScenarioConfig join10() { return cli::load_scenario(DUALFEED_SCENARIO_DIR "/join10.scenario"); }

ScenarioConfig with_failure(std::uint32_t node, Strategy strategy, std::uint32_t lag = 5) {
  ScenarioConfig c = join10();
  c.horizon = 250;
  c.strategy = strategy;
  c.playout_lag = lag;
  c.failures = {{NodeId{node}, 100}};
  return c;
}

const RecoveryRecord& only_recovery(const RunResult& r) {
  REQUIRE(r.metrics.recoveries.size() == 1);
  return r.metrics.recoveries.front();
}

}  // namespace

TEST_SUITE("engine") {

TEST_CASE("ten-node build") {
  const RunResult r = run_scenario(join10());
  CHECK(r.quiescent);
  CHECK_FALSE(r.flagged);
  CHECK(r.topology.nodes.size() == 10);
  CHECK(check_invariants(r.topology, true).empty());
  const NodeSnapshot* one = r.topology.find(NodeId{1});
  REQUIRE(one);
  CHECK(one->parent[0] == S);
  CHECK(one->parent[1] == NodeId{2});
}

TEST_CASE("same seed, same bytes") {
  ScenarioConfig c = cli::load_scenario(DUALFEED_SCENARIO_DIR "/churn200.scenario");
  c.horizon = 300;
  const RunResult a = run_scenario(c);
  const RunResult b = run_scenario(c);
  CHECK(cli::trace_jsonl(a.trace) == cli::trace_jsonl(b.trace));
  CHECK(cli::metrics_csv(a.metrics) == cli::metrics_csv(b.metrics));
  CHECK(a.stats.events == b.stats.events);
}

TEST_CASE("events are processed in time order") {
  const RunResult r = run_scenario(with_failure(3, Strategy::Ine));
  for (std::size_t i = 1; i < r.trace.size(); ++i) {
    REQUIRE(r.trace[i - 1].at <= r.trace[i].at);
    if (r.trace[i - 1].at == r.trace[i].at) REQUIRE(r.trace[i - 1].seq_no <= r.trace[i].seq_no);
  }
}

TEST_CASE("the source cannot fail or leave") {
  Engine e(join10());
  CHECK_THROWS_AS(e.inject_failure(S, 50), std::invalid_argument);
  CHECK_THROWS_AS(e.inject_leave(S, 50), std::invalid_argument);
}

TEST_CASE("leaf failure has nothing to repair") {
  const RunResult r = run_scenario(with_failure(9, Strategy::Ine));
  const RecoveryRecord& rec = only_recovery(r);
  CHECK(rec.affected_count == 0);
  CHECK(rec.recovery_time == Tick{0});
  CHECK_FALSE(r.flagged);
  CHECK(r.topology.find(NodeId{9}) == nullptr);
  for (const auto& [id, snap] : r.topology.nodes) {
    for (FeedId f : kFeeds) {
      for (NodeId c : snap.children[slot(f)]) CHECK(c != NodeId{9});
    }
  }
}

TEST_CASE("interior failure recovers under every strategy") {
  for (Strategy s : {Strategy::Hold, Strategy::Unpublish, Strategy::Ine}) {
    CAPTURE(to_string(s));
    const RunResult r = run_scenario(with_failure(3, s));
    const RecoveryRecord& rec = only_recovery(r);
    CHECK(rec.affected_count == 6);
    REQUIRE(rec.detect_time);
    REQUIRE(rec.resume_time);
    CHECK(*rec.detect_time <= 103);
    CHECK(*rec.resume_time <= 105);
    CHECK_FALSE(r.flagged);
    CHECK(r.quiescent);
    CHECK(check_invariants(r.topology, true).empty());
    for (const NodeMetrics& n : r.metrics.nodes) CHECK(n.underruns == 0);
    // Orphans went back to their grandparent.
    CHECK(r.topology.find(NodeId{4})->parent[0] == NodeId{1});
    CHECK(r.topology.find(NodeId{5})->parent[0] == NodeId{1});
  }
}

TEST_CASE("held subtree does not serve during the hold") {
  const RunResult r = run_scenario(with_failure(3, Strategy::Hold));
  std::map<NodeId, Tick> held_until;
  for (const TraceRecord& t : r.trace) {
    if (t.action == "hold") held_until[t.node] = std::max(held_until[t.node], Tick{t.value});
    if (t.action == "accept") {
      auto it = held_until.find(t.node);
      if (it != held_until.end()) CHECK(t.at >= it->second);
    }
  }
  CHECK(held_until.size() == 6);
}

TEST_CASE("graceful leave hands children to the grandparent") {
  ScenarioConfig c = join10();
  c.horizon = 250;
  c.playout_lag = 5;
  c.leaves = {{NodeId{3}, 100}};
  const RunResult r = run_scenario(c);
  CHECK(r.quiescent);
  CHECK(r.topology.find(NodeId{3}) == nullptr);
  CHECK(r.topology.find(NodeId{4})->parent[0] == NodeId{1});
  CHECK(r.topology.find(NodeId{5})->parent[0] == NodeId{1});
  CHECK(check_invariants(r.topology, true).empty());
  for (const NodeMetrics& n : r.metrics.nodes) CHECK(n.underruns == 0);
}

TEST_CASE("buffer stays within hop difference plus lag plus one") {
  for (std::uint32_t lag : {1u, 3u, 5u}) {
    ScenarioConfig c = join10();
    c.playout_lag = lag;
    const RunResult r = run_scenario(c);
    for (const NodeMetrics& n : r.metrics.nodes) {
      REQUIRE(n.hop_diff);
      CHECK(n.max_occupancy <= *n.hop_diff + lag + 1);
      CHECK(n.underruns == 0);
    }
  }
}

TEST_CASE("optimizer keeps the overlay valid") {
  ScenarioConfig c = cli::load_scenario(DUALFEED_SCENARIO_DIR "/churn200.scenario");
  c.optimizer_period = 20;
  c.horizon = 400;
  std::uint64_t checked = 0;
  run_scenario(c, [&](const Engine& e) {
    if (!e.quiescent()) return;
    ++checked;
    const Topology t = e.snapshot();
    REQUIRE(check_invariants(t, false).empty());
  });
  CHECK(checked > 0);
}

}  // TEST_SUITE
