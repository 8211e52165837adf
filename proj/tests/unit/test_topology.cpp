#include "doctest.h"
#include "dualfeed/metrics.hpp"
#include "dualfeed/topology.hpp"

using namespace dualfeed;

namespace {

const NodeId S{0};

Topology ten_nodes() {
  Topology t;
  NodeSnapshot s;
  s.id = S;
  s.is_source = true;
  t.nodes[S] = s;
  const std::uint32_t p1[] = {0, 0, 1, 1, 3, 3, 5, 5, 7, 7};
  const std::uint32_t p2[] = {0, 2, 0, 2, 2, 4, 4, 6, 6, 8};
  for (std::uint32_t i = 1; i <= 9; ++i) {
    NodeSnapshot n;
    n.id = NodeId{i};
    n.parent = {NodeId{p1[i]}, NodeId{p2[i]}};
    n.forwarded_feed = i % 2 ? FeedId::F1 : FeedId::F2;
    t.nodes[n.id] = n;
  }
  for (auto& [id, n] : t.nodes) {
    for (FeedId f : kFeeds) {
      if (auto p = n.parent[slot(f)]) t.nodes[*p].children[slot(f)].push_back(id);
    }
  }
  return t;
}

}  // namespace

TEST_SUITE("topology") {

TEST_CASE("the example topology satisfies every invariant") {
  const Topology t = ten_nodes();
  CHECK(check_invariants(t, true).empty());
  for (std::uint32_t i = 1; i <= 9; ++i) CHECK(dual_fed(t, NodeId{i}));
  const ParentChain c = walk_chain(t, NodeId{9}, FeedId::F1);
  CHECK(c.status == ChainStatus::ReachesSource);
  CHECK(c.interior == std::vector<NodeId>{NodeId{7}, NodeId{5}, NodeId{3}, NodeId{1}});
}

TEST_CASE("hop differences of the example") {
  const HopMetrics h = hop_metrics(ten_nodes());
  REQUIRE(h.nodes.size() == 9);
  const std::uint32_t diff[] = {1, 1, 0, 1, 0, 1, 0, 1, 0};
  for (std::size_t i = 0; i < 9; ++i) CHECK(h.nodes[i].hop_diff == diff[i]);
  CHECK(h.nodes[8].hop_f1 == 5u);
  CHECK(h.nodes[8].hop_f2 == 5u);
  CHECK(h.diff_histogram.at(0) == 4);
  CHECK(h.diff_histogram.at(1) == 5);
}

TEST_CASE("partial attachment reports the missing side") {
  Topology t;
  t.nodes[S] = NodeSnapshot{S, true, {}, std::nullopt, {}};
  NodeSnapshot one{NodeId{1}, false, {S, std::nullopt}, FeedId::F1, {}};
  t.nodes[one.id] = one;
  const HopMetrics h = hop_metrics(t);
  REQUIRE(h.nodes.size() == 1);
  CHECK(h.nodes[0].hop_f1 == 1u);
  CHECK_FALSE(h.nodes[0].hop_f2);
  CHECK_FALSE(h.nodes[0].hop_diff);
  CHECK(h.diff_histogram.empty());
  CHECK_FALSE(check_connected(t).empty());
  CHECK(check_invariants(t, false).empty());
}

TEST_CASE("shared interior node breaks disjointness") {
  Topology t = ten_nodes();
  // 9 now takes F2 from 7, which is on its F1 path and relays F1.
  t.nodes[NodeId{9}].parent[1] = NodeId{7};
  CHECK_FALSE(check_disjointness(t).empty());
  CHECK_FALSE(check_feed_purity(t).empty());
}

TEST_CASE("cycles are found") {
  Topology t = ten_nodes();
  t.nodes[NodeId{3}].parent[0] = NodeId{7};  // 3 -> 7 -> 5 -> 3
  CHECK(walk_chain(t, NodeId{9}, FeedId::F1).status == ChainStatus::Cycle);
  CHECK_FALSE(check_cycles(t).empty());
  CHECK(check_cycles(ten_nodes()).empty());
}

TEST_CASE("broken chain is not a cycle") {
  Topology t = ten_nodes();
  t.nodes.erase(NodeId{3});
  CHECK(walk_chain(t, NodeId{5}, FeedId::F1).status == ChainStatus::Broken);
  CHECK(check_cycles(t).empty());
  CHECK_FALSE(check_connected(t).empty());
}

}  // TEST_SUITE
