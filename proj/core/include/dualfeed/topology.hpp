#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dualfeed/types.hpp"

namespace dualfeed {

/// Read-only view of one live node, taken at a single instant.
struct NodeSnapshot {
  NodeId id;
  bool is_source = false;
  std::array<std::optional<NodeId>, 2> parent;
  std::optional<FeedId> forwarded_feed;
  std::array<std::vector<NodeId>, 2> children;
};

struct Topology {
  std::map<NodeId, NodeSnapshot> nodes;  // live nodes only, source included

  const NodeSnapshot* find(NodeId id) const;
  /// Parent-pointer children of `node` in `feed` (the data-plane view).
  std::vector<NodeId> receivers(NodeId node, FeedId feed) const;
};

enum class ChainStatus : std::uint8_t { ReachesSource, Broken, Cycle };

struct ParentChain {
  ChainStatus status = ChainStatus::Broken;
  /// Nodes strictly between the node and the source, nearest first.
  std::vector<NodeId> interior;
};

/// Follows `feed` parent pointers from `node`, bounded by the node count.
ParentChain walk_chain(const Topology& topo, NodeId node, FeedId feed);

struct Violation {
  std::string kind;
  NodeId node;
  std::string detail;
};

/// Each non-source node relays at most one feed, and every node receiving a
/// feed from a non-source parent gets it from a forwarder of that feed.
std::vector<Violation> check_feed_purity(const Topology& topo);
/// No parent chain revisits a node.
std::vector<Violation> check_cycles(const Topology& topo);
/// Interior nodes of the two source paths are disjoint for dual-fed nodes.
std::vector<Violation> check_disjointness(const Topology& topo);
/// Every live node reaches the source on both feeds (single tree per feed).
std::vector<Violation> check_connected(const Topology& topo);
/// Purity, cycles and disjointness; connectivity only when `require_connected`.
std::vector<Violation> check_invariants(const Topology& topo, bool require_connected);

bool dual_fed(const Topology& topo, NodeId node);

}  // namespace dualfeed
