#include "dualfeed/topology.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace dualfeed {

namespace {

std::string describe(NodeId a, const char* text, NodeId b) {
  std::ostringstream os;
  os << a << text << b;
  return os.str();
}

}  // namespace

const NodeSnapshot* Topology::find(NodeId id) const {
  auto it = nodes.find(id);
  return it == nodes.end() ? nullptr : &it->second;
}

std::vector<NodeId> Topology::receivers(NodeId node, FeedId feed) const {
  std::vector<NodeId> out;
  for (const auto& [id, snap] : nodes) {
    if (snap.parent[slot(feed)] == node) out.push_back(id);
  }
  return out;
}

ParentChain walk_chain(const Topology& topo, NodeId node, FeedId feed) {
  ParentChain chain;
  const NodeSnapshot* cur = topo.find(node);
  if (!cur) return chain;
  if (cur->is_source) {
    chain.status = ChainStatus::ReachesSource;
    return chain;
  }
  std::set<NodeId> seen{node};
  for (std::size_t steps = 0; steps <= topo.nodes.size(); ++steps) {
    const auto next = cur->parent[slot(feed)];
    if (!next) return chain;
    cur = topo.find(*next);
    if (!cur) return chain;
    if (cur->is_source) {
      chain.status = ChainStatus::ReachesSource;
      return chain;
    }
    if (!seen.insert(*next).second) {
      chain.status = ChainStatus::Cycle;
      return chain;
    }
    chain.interior.push_back(*next);
  }
  chain.status = ChainStatus::Cycle;
  return chain;
}

std::vector<Violation> check_feed_purity(const Topology& topo) {
  std::vector<Violation> out;
  for (const auto& [id, snap] : topo.nodes) {
    if (snap.is_source) continue;
    for (FeedId f : kFeeds) {
      const auto p = snap.parent[slot(f)];
      if (!p) continue;
      const NodeSnapshot* ps = topo.find(*p);
      if (ps && !ps->is_source && ps->forwarded_feed != f) {
        out.push_back({"purity", id, describe(id, " receives from non-forwarder ", *p)});
      }
    }
  }
  return out;
}

std::vector<Violation> check_cycles(const Topology& topo) {
  std::vector<Violation> out;
  for (const auto& [id, snap] : topo.nodes) {
    for (FeedId f : kFeeds) {
      if (walk_chain(topo, id, f).status == ChainStatus::Cycle) {
        out.push_back({"cycle", id, std::string("parent chain loops on ") + std::string(to_string(f))});
      }
    }
  }
  return out;
}

std::vector<Violation> check_disjointness(const Topology& topo) {
  std::vector<Violation> out;
  for (const auto& [id, snap] : topo.nodes) {
    if (snap.is_source) continue;
    const ParentChain a = walk_chain(topo, id, FeedId::F1);
    const ParentChain b = walk_chain(topo, id, FeedId::F2);
    if (a.status != ChainStatus::ReachesSource || b.status != ChainStatus::ReachesSource) continue;
    std::set<NodeId> left(a.interior.begin(), a.interior.end());
    for (NodeId n : b.interior) {
      if (left.count(n)) {
        out.push_back({"disjointness", id, describe(id, " shares interior node ", n)});
        break;
      }
    }
  }
  return out;
}

std::vector<Violation> check_connected(const Topology& topo) {
  std::vector<Violation> out;
  for (const auto& [id, snap] : topo.nodes) {
    if (snap.is_source) continue;
    for (FeedId f : kFeeds) {
      if (walk_chain(topo, id, f).status != ChainStatus::ReachesSource) {
        out.push_back({"connectivity", id, std::string("no path to source on ") + std::string(to_string(f))});
      }
    }
  }
  return out;
}

std::vector<Violation> check_invariants(const Topology& topo, bool require_connected) {
  std::vector<Violation> out = check_feed_purity(topo);
  auto append = [&](std::vector<Violation> more) {
    out.insert(out.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));
  };
  append(check_cycles(topo));
  append(check_disjointness(topo));
  if (require_connected) append(check_connected(topo));
  return out;
}

bool dual_fed(const Topology& topo, NodeId node) {
  return walk_chain(topo, node, FeedId::F1).status == ChainStatus::ReachesSource &&
         walk_chain(topo, node, FeedId::F2).status == ChainStatus::ReachesSource;
}

}  // namespace dualfeed
