#include <random>

#include "doctest.h"
#include "dualfeed/tree_optimizer.hpp"
#include "oracles.hpp"

using namespace dualfeed;

namespace {

const NodeId S{0};

NodeId n(std::uint32_t v) { return NodeId{v}; }

// The two trees of the ten-node example, children added in id order.
FeedTree join10_f1() {
  FeedTree t(S);
  const std::uint32_t parent[] = {0, 0, 1, 1, 3, 3, 5, 5, 7, 7};
  for (std::uint32_t i = 1; i <= 9; ++i) t.add_child(n(parent[i]), n(i));
  return t;
}

FeedTree join10_f2() {
  FeedTree t(S);
  t.add_child(S, n(2));
  const std::uint32_t parent[] = {0, 2, 0, 2, 2, 4, 4, 6, 6, 8};
  for (std::uint32_t i = 1; i <= 9; ++i) {
    if (i != 2) t.add_child(n(parent[i]), n(i));
  }
  return t;
}

FeedTree chain() {
  FeedTree t(S);
  t.add_child(S, n(1));
  t.add_child(n(1), n(2));
  t.add_child(n(2), n(3));
  return t;
}

// A skipped swap is only logged; it does not count as an action.
bool rewired(const std::vector<OptimizerAction>& actions) {
  for (const OptimizerAction& a : actions) {
    if (a.kind != OptimizerAction::Kind::SwapSkipped) return true;
  }
  return false;
}

}  // namespace

TEST_SUITE("optimizer") {

TEST_CASE("cumulative children of the example trees") {
  const FeedTree f1 = join10_f1();
  CHECK(compute_cc(f1, n(7)) == 2);
  CHECK(compute_cc(f1, n(5)) == 4);
  CHECK(compute_cc(f1, n(3)) == 6);
  CHECK(compute_cc(f1, n(1)) == 8);
  CHECK(compute_cc(f1, S) == 9);
  CHECK(compute_cc(f1, n(9)) == 0);

  const FeedTree f2 = join10_f2();
  CHECK(compute_cc(f2, n(2)) == 8);
  CHECK(compute_cc(f2, n(4)) == 5);
  CHECK(compute_cc(f2, n(6)) == 3);
  CHECK(compute_cc(f2, n(8)) == 1);
  CHECK(compute_cc(f2, n(1)) == 0);

  CHECK_THROWS_AS(compute_cc(f2, n(42)), std::out_of_range);
}

TEST_CASE("incremental cc matches the oracle under rewiring") {
  std::mt19937_64 rng(5);
  for (int round = 0; round < 30; ++round) {
    FeedTree t = oracle::random_tree(rng, 40, 3, 2);
    for (int step = 0; step < 20; ++step) {
      const NodeId a{static_cast<std::uint32_t>(1 + rng() % 39)};
      const NodeId b{static_cast<std::uint32_t>(rng() % 40)};
      if (t.in_subtree(b, a)) continue;
      t.move(a, b);
    }
    const auto pm = oracle::parents_of(t);
    for (NodeId v : t.bfs()) {
      REQUIRE(t.cc(v) == oracle::cc(pm, v));
      REQUIRE(t.depth(v) == oracle::depth(pm, v));
    }
    CHECK(t.total_depth() == oracle::total_depth(pm));
  }
}

TEST_CASE("swap eligibility") {
  const FeedTree f2 = join10_f2();
  const CcLookup cc = exact_cc(f2);
  CHECK(swap_eligible(f2, n(4), cc));   // 5 > (0+1) + (0+1)
  CHECK_FALSE(swap_eligible(f2, n(1), cc));
  CHECK_FALSE(swap_eligible(f2, n(2), cc));  // never displaces the source
  CHECK_FALSE(swap_eligible(f2, S, cc));

  SUBCASE("equality is not enough") {
    // P -> {i, j, k}; cc(i) = 2, siblings contribute (0+1) + (1+1) = 3.
    FeedTree t(S);
    t.add_child(S, n(1));
    t.add_child(n(1), n(10));
    for (std::uint32_t c : {11u, 12u, 13u}) t.add_child(n(10), n(c));
    t.add_child(n(11), n(20));
    t.add_child(n(11), n(21));
    t.add_child(n(13), n(30));
    CHECK_FALSE(swap_eligible(t, n(11), exact_cc(t)));
  }
  SUBCASE("lone child in a chain") {
    const FeedTree c = chain();
    CHECK(swap_eligible(c, n(2), exact_cc(c)));
  }
}

TEST_CASE("swap in the F2 example tree") {
  FeedTree f2 = join10_f2();
  REQUIRE(f2.total_depth() == 26);
  const auto action = execute_swap(f2, n(4), exact_cc(f2), OptimizerLimits{3, 1});
  REQUIRE(action);
  CHECK(action->kind == OptimizerAction::Kind::Swap);
  CHECK(action->predicted_delta == -3);
  const std::pair<std::uint32_t, std::uint32_t> want[] = {{4, 1}, {2, 2}, {1, 3}, {3, 3}, {5, 2},
                                                          {6, 2}, {7, 3}, {8, 3}, {9, 4}};
  for (auto [id, d] : want) CHECK(f2.depth(n(id)) == d);
  CHECK(f2.total_depth() == 23);
  CHECK(f2.parent(n(4)) == S);
  CHECK(f2.parent(n(2)) == n(4));
}

TEST_CASE("swap in a chain") {
  FeedTree c = chain();
  REQUIRE(c.total_depth() == 6);
  REQUIRE(execute_swap(c, n(2), exact_cc(c), OptimizerLimits{3, 1}));
  CHECK(c.parent(n(2)) == S);
  CHECK(c.parent(n(1)) == n(2));
  CHECK(c.parent(n(3)) == n(2));
  CHECK(c.total_depth() == 5);
}

TEST_CASE("swap that would overfill is skipped") {
  FeedTree t(S);
  t.add_child(S, n(1));
  t.add_child(n(1), n(10));
  t.add_child(n(10), n(11));
  t.add_child(n(10), n(12));
  for (std::uint32_t c : {20u, 21u, 22u}) t.add_child(n(11), n(c));
  t.add_child(n(20), n(30));
  const auto before = oracle::parents_of(t);
  REQUIRE(swap_eligible(t, n(11), exact_cc(t)));
  const auto action = execute_swap(t, n(11), exact_cc(t), OptimizerLimits{3, 1});
  REQUIRE(action);
  CHECK(action->kind == OptimizerAction::Kind::SwapSkipped);
  CHECK(oracle::parents_of(t) == before);
}

TEST_CASE("fill promotes the heaviest grandchild") {
  FeedTree t(S);
  t.add_child(S, n(1));            // P
  t.add_child(n(1), n(2));         // A
  t.add_child(n(1), n(3));         // B, childless
  t.add_child(n(2), n(4));         // Y, cc 0
  t.add_child(n(2), n(5));         // X, cc 2
  t.add_child(n(5), n(6));
  t.add_child(n(5), n(7));
  const auto before = oracle::parents_of(t);
  CHECK(best_grandchild(t, n(1), exact_cc(t)) == n(5));
  const auto action = fill_free_out_degree(t, n(1), exact_cc(t), OptimizerLimits{3, 1});
  REQUIRE(action);
  CHECK(action->kind == OptimizerAction::Kind::Promote);
  CHECK(action->node == n(5));
  CHECK(t.parent(n(5)) == n(1));
  for (std::uint32_t moved : {5u, 6u, 7u}) CHECK(t.depth(n(moved)) + 1 == oracle::depth(before, n(moved)));
  CHECK(t.depth(n(4)) == oracle::depth(before, n(4)));
  CHECK(oracle::total_depth(oracle::parents_of(t)) + 3 == oracle::total_depth(before));
}

TEST_CASE("fill is a no-op without grandchildren") {
  FeedTree f2 = join10_f2();
  CHECK_FALSE(fill_free_out_degree(f2, n(8), exact_cc(f2), OptimizerLimits{3, 1}));
  CHECK_FALSE(fill_free_out_degree(f2, n(9), exact_cc(f2), OptimizerLimits{3, 1}));
  // Node 2 is full.
  CHECK_FALSE(fill_free_out_degree(f2, n(2), exact_cc(f2), OptimizerLimits{3, 1}));
}

TEST_CASE("rounds respect the degree cap and converge") {
  std::mt19937_64 rng(17);
  for (int round = 0; round < 20; ++round) {
    const std::uint32_t size = 10 + static_cast<std::uint32_t>(rng() % 60);
    FeedTree t = oracle::random_tree(rng, size, 3, 1);
    std::uint64_t depth = t.total_depth();
    std::uint32_t rounds = 0;
    while (rewired(optimize_round(t, exact_cc(t), OptimizerLimits{3, 1}))) {
      REQUIRE(++rounds <= size);
      REQUIRE(t.total_depth() <= depth);
      depth = t.total_depth();
    }
    for (NodeId v : t.bfs()) CHECK(t.children(v).size() <= (v == S ? 1u : 3u));
  }
}

TEST_CASE("aggregated cc equals the oracle") {
  std::mt19937_64 rng(3);
  for (int round = 0; round < 10; ++round) {
    const FeedTree t = oracle::random_tree(rng, 50, 3, 1);
    CcAggregator agg(t);
    const auto got = agg.run(rng);
    const auto pm = oracle::parents_of(t);
    for (NodeId v : t.bfs()) CHECK(got.at(v) == oracle::cc(pm, v));
    CHECK(agg.messages() >= t.size() - 1);
  }
}

}  // TEST_SUITE
