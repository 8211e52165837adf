// Independent reference implementations used to check the library.
// Everything here works from plain parent maps and linear scans so it shares
// no code with the structures under test.
#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <vector>

#include "dualfeed/index_table.hpp"
#include "dualfeed/topology.hpp"
#include "dualfeed/tree_optimizer.hpp"

namespace oracle {

using dualfeed::NodeId;
using ParentMap = std::map<NodeId, NodeId>;  // child -> parent; root absent

inline ParentMap parents_of(const dualfeed::FeedTree& tree) {
  ParentMap out;
  for (NodeId n : tree.bfs()) {
    if (auto p = tree.parent(n)) out[n] = *p;
  }
  return out;
}

inline std::vector<NodeId> children(const ParentMap& pm, NodeId node) {
  std::vector<NodeId> out;
  for (const auto& [c, p] : pm) {
    if (p == node) out.push_back(c);
  }
  return out;
}

// Recursive definition, straight from the glossary.
inline std::uint32_t cc(const ParentMap& pm, NodeId node) {
  std::uint32_t total = 0;
  for (NodeId c : children(pm, node)) total += cc(pm, c) + 1;
  return total;
}

inline std::uint32_t depth(const ParentMap& pm, NodeId node) {
  std::uint32_t d = 0;
  for (auto it = pm.find(node); it != pm.end(); it = pm.find(it->second)) ++d;
  return d;
}

inline std::uint64_t total_depth(const ParentMap& pm) {
  std::uint64_t sum = 0;
  for (const auto& [c, p] : pm) sum += depth(pm, c);
  return sum;
}

// Random tree rooted at 0 where every node respects its degree cap.
inline dualfeed::FeedTree random_tree(std::mt19937_64& rng, std::uint32_t size, std::uint32_t max_out,
                                      std::uint32_t root_cap) {
  dualfeed::FeedTree tree(NodeId{0});
  std::vector<NodeId> open{NodeId{0}};
  std::map<NodeId, std::uint32_t> out;
  for (std::uint32_t i = 1; i < size; ++i) {
    const std::size_t k = rng() % open.size();
    const NodeId parent = open[k];
    tree.add_child(parent, NodeId{i});
    const std::uint32_t cap = parent.value == 0 ? root_cap : max_out;
    if (++out[parent] >= cap) open.erase(open.begin() + static_cast<std::ptrdiff_t>(k));
    open.push_back(NodeId{i});
  }
  return tree;
}

// Linear scan over every record with the documented selection rules.
inline std::optional<NodeId> best_source(const dualfeed::IndexTable& index, dualfeed::FeedId feed,
                                         NodeId requester, dualfeed::Tick now,
                                         const std::vector<NodeId>& exclude = {}) {
  const auto& cfg = index.config();
  struct Cand {
    std::uint32_t out;
    dualfeed::Tick reg;
    NodeId id;
  };
  std::vector<Cand> cands;
  auto excluded = [&](NodeId id) {
    for (NodeId e : exclude) {
      if (e == id) return true;
    }
    return false;
  };
  if (index.source() != requester && !excluded(index.source()) &&
      index.source_out_degree(feed) < cfg.source_capacity) {
    cands.push_back({index.source_out_degree(feed), dualfeed::kNever, index.source()});
  }
  for (const auto& [id, r] : index.records()) {
    if (id == requester || excluded(id)) continue;
    if (r.willing_feed != feed) continue;
    // Only forwarders that are themselves receiving the feed they advertise.
    const auto& upstream = feed == dualfeed::FeedId::F1 ? r.parent_f1 : r.parent_f2;
    if (!upstream) continue;
    const std::uint32_t load = r.out_degree + index.referrals(id);
    if (load >= cfg.max_out_degree) continue;
    if (r.ineligible_until && now < *r.ineligible_until) continue;
    if (now - r.last_refresh > cfg.refresh_ttl) continue;
    cands.push_back({load, r.registered_at, id});
  }
  if (cands.empty()) return std::nullopt;
  Cand best = cands.front();
  for (const Cand& c : cands) {
    if (c.out < best.out || (c.out == best.out && (c.reg < best.reg || (c.reg == best.reg && c.id < best.id)))) {
      best = c;
    }
  }
  return best.id;
}


// Interior nodes of `node`'s path to the source on `feed`, or nullopt when the
// path is broken or loops. Plain pointer chasing with a step bound.
inline std::optional<std::vector<NodeId>> source_path(const dualfeed::Topology& topo, NodeId node,
                                                      dualfeed::FeedId feed) {
  std::vector<NodeId> interior;
  NodeId at = node;
  for (std::size_t steps = 0; steps <= topo.nodes.size(); ++steps) {
    auto it = topo.nodes.find(at);
    if (it == topo.nodes.end()) return std::nullopt;
    const auto& p = it->second.parent[dualfeed::slot(feed)];
    if (!p) return std::nullopt;
    if (*p == dualfeed::kSourceId) return interior;
    interior.push_back(*p);
    at = *p;
  }
  return std::nullopt;
}

// Dual-fed nodes whose two paths share an interior node.
inline std::vector<NodeId> disjointness_violations(const dualfeed::Topology& topo) {
  std::vector<NodeId> bad;
  for (const auto& [id, snap] : topo.nodes) {
    if (snap.is_source) continue;
    const auto a = source_path(topo, id, dualfeed::FeedId::F1);
    const auto b = source_path(topo, id, dualfeed::FeedId::F2);
    if (!a || !b) continue;
    for (NodeId x : *a) {
      if (std::find(b->begin(), b->end(), x) != b->end()) {
        bad.push_back(id);
        break;
      }
    }
  }
  return bad;
}

inline bool dual_fed(const dualfeed::Topology& topo, NodeId node) {
  return source_path(topo, node, dualfeed::FeedId::F1) && source_path(topo, node, dualfeed::FeedId::F2);
}

// Receivers whose non-source parent on a feed does not forward that feed.
inline std::vector<NodeId> purity_violations(const dualfeed::Topology& topo) {
  std::vector<NodeId> bad;
  for (const auto& [id, snap] : topo.nodes) {
    for (dualfeed::FeedId f : dualfeed::kFeeds) {
      const auto& p = snap.parent[dualfeed::slot(f)];
      if (!p || *p == dualfeed::kSourceId) continue;
      auto it = topo.nodes.find(*p);
      if (it != topo.nodes.end() && it->second.forwarded_feed != f) bad.push_back(id);
    }
  }
  return bad;
}

// Whether following parent pointers from any node in `parent` revisits a
// node. Missing entries end a chain.
inline bool has_cycle(const std::map<NodeId, NodeId>& parent) {
  std::map<NodeId, int> colour;  // 1 on the current walk, 2 finished
  for (const auto& [start, unused] : parent) {
    std::vector<NodeId> walk;
    NodeId at = start;
    while (true) {
      const int c = colour[at];
      if (c == 1) return true;
      if (c == 2) break;
      colour[at] = 1;
      walk.push_back(at);
      auto it = parent.find(at);
      if (it == parent.end()) break;
      at = it->second;
    }
    for (NodeId w : walk) colour[w] = 2;
  }
  return false;
}

}  // namespace oracle
