#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dualfeed/types.hpp"

namespace dualfeed {

/// Mutable single-feed distribution tree. Tracks subtree sizes so that
/// cumulative-children values stay exact across rewiring.
class FeedTree {
 public:
  explicit FeedTree(NodeId root);

  /// Adds `child` under `parent`. `parent` must already be present.
  void add_child(NodeId parent, NodeId child, bool relay = true);
  /// Whether the node may be given children (the root always can).
  void set_relay(NodeId node, bool relay);
  bool relay(NodeId node) const;

  NodeId root() const { return root_; }
  bool contains(NodeId node) const { return nodes_.count(node) != 0; }
  std::size_t size() const { return nodes_.size(); }
  std::optional<NodeId> parent(NodeId node) const;
  const std::vector<NodeId>& children(NodeId node) const;
  /// Subtree size minus one, maintained incrementally.
  std::uint32_t cc(NodeId node) const;
  std::uint32_t depth(NodeId node) const;
  std::uint64_t total_depth() const;
  /// Breadth-first order from the root; children visited in insertion order.
  std::vector<NodeId> bfs() const;
  bool in_subtree(NodeId node, NodeId subtree_root) const;

  /// Re-hangs `node` (with its subtree) under `new_parent`.
  void move(NodeId node, NodeId new_parent);
  /// `node` takes its parent's place; the parent becomes its last child.
  void swap_with_parent(NodeId node);

 private:
  struct Entry {
    std::optional<NodeId> parent;
    std::vector<NodeId> children;
    std::uint32_t size = 1;
    bool relay = true;
  };
  Entry& at(NodeId node);
  const Entry& at(NodeId node) const;
  void adjust_sizes(NodeId from, std::int64_t delta);

  NodeId root_;
  std::unordered_map<NodeId, Entry> nodes_;
};

/// Recursive definition: 0 for leaves, otherwise sum over children of cc + 1.
/// Throws std::out_of_range for nodes not in the tree.
std::uint32_t compute_cc(const FeedTree& tree, NodeId node);

using CcLookup = std::function<std::uint32_t(NodeId)>;

/// Live values straight from the tree.
CcLookup exact_cc(const FeedTree& tree);

struct OptimizerLimits {
  std::uint32_t max_out_degree = 3;
  std::uint32_t root_capacity = 1;
};

struct OptimizerAction {
  enum class Kind : std::uint8_t { Shed, Promote, Swap, SwapSkipped };
  Kind kind = Kind::Promote;
  NodeId node;        // the node that moved up (or was shed)
  NodeId old_parent;
  NodeId new_parent;
  std::uint32_t cc = 0;
  // Total-depth change predicted from the cc values used for the decision.
  std::int64_t predicted_delta = 0;
};

std::string_view to_string(OptimizerAction::Kind kind);

/// Grandchild with the highest cc (tie: lowest id) among `node`'s children's
/// children, or nullopt when there is none.
std::optional<NodeId> best_grandchild(const FeedTree& tree, NodeId node, const CcLookup& cc);

/// Promotes the best grandchild to a direct child of `node` when `node` has
/// free degree. Returns the action performed, if any.
std::optional<OptimizerAction> fill_free_out_degree(FeedTree& tree, NodeId node,
                                                    const CcLookup& cc,
                                                    const OptimizerLimits& limits);

/// cc_i > sum over siblings j of (cc_j + 1). False for the root and for
/// direct children of the root (the root is never displaced).
bool swap_eligible(const FeedTree& tree, NodeId node, const CcLookup& cc);

/// Moves `node` into its parent's slot; the parent becomes a child of `node`
/// and keeps the remaining siblings. Returns a SwapSkipped action when the
/// node would exceed the degree cap, nullopt when not eligible.
std::optional<OptimizerAction> execute_swap(FeedTree& tree, NodeId node, const CcLookup& cc,
                                            const OptimizerLimits& limits);

/// Called after each action is applied, with the tree in its new shape.
using ActionObserver = std::function<void(const OptimizerAction&, const FeedTree&)>;

/// One optimizer round over a breadth-first snapshot: shed children above the
/// cap, fill free degree, then at most one swap among each parent's children.
std::vector<OptimizerAction> optimize_round(FeedTree& tree, const CcLookup& cc,
                                            const OptimizerLimits& limits,
                                            const ActionObserver& observer = {});

/// Asynchronous child-to-parent cc reporting in seeded random order until no
/// report changes any value.
class CcAggregator {
 public:
  explicit CcAggregator(const FeedTree& tree) : tree_(tree) {}

  /// Returns each node's value once quiescent.
  std::map<NodeId, std::uint32_t> run(std::mt19937_64& rng);
  std::uint64_t messages() const { return messages_; }

 private:
  const FeedTree& tree_;
  std::uint64_t messages_ = 0;
};

}  // namespace dualfeed
