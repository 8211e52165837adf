#include "dualfeed/tree_optimizer.hpp"

#include <algorithm>
#include <stdexcept>

namespace dualfeed {

FeedTree::FeedTree(NodeId root) : root_(root) { nodes_[root] = Entry{}; }

FeedTree::Entry& FeedTree::at(NodeId node) {
  auto it = nodes_.find(node);
  if (it == nodes_.end()) throw std::out_of_range("node not in feed tree");
  return it->second;
}

const FeedTree::Entry& FeedTree::at(NodeId node) const {
  auto it = nodes_.find(node);
  if (it == nodes_.end()) throw std::out_of_range("node not in feed tree");
  return it->second;
}

void FeedTree::adjust_sizes(NodeId from, std::int64_t delta) {
  std::optional<NodeId> cur = from;
  while (cur) {
    Entry& e = at(*cur);
    e.size = static_cast<std::uint32_t>(static_cast<std::int64_t>(e.size) + delta);
    cur = e.parent;
  }
}

void FeedTree::add_child(NodeId parent, NodeId child, bool relay) {
  if (contains(child)) throw std::invalid_argument("node already in feed tree");
  at(parent).children.push_back(child);
  Entry e;
  e.parent = parent;
  e.relay = relay;
  nodes_.emplace(child, std::move(e));
  adjust_sizes(parent, 1);
}

void FeedTree::set_relay(NodeId node, bool relay) { at(node).relay = relay; }

bool FeedTree::relay(NodeId node) const { return node == root_ || at(node).relay; }

std::optional<NodeId> FeedTree::parent(NodeId node) const { return at(node).parent; }

const std::vector<NodeId>& FeedTree::children(NodeId node) const { return at(node).children; }

std::uint32_t FeedTree::cc(NodeId node) const { return at(node).size - 1; }

std::uint32_t FeedTree::depth(NodeId node) const {
  std::uint32_t d = 0;
  for (auto p = at(node).parent; p; p = at(*p).parent) ++d;
  return d;
}

std::vector<NodeId> FeedTree::bfs() const {
  std::vector<NodeId> order{root_};
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& kids = at(order[i]).children;
    order.insert(order.end(), kids.begin(), kids.end());
  }
  return order;
}

std::uint64_t FeedTree::total_depth() const {
  std::uint64_t total = 0;
  std::vector<std::pair<NodeId, std::uint32_t>> level{{root_, 0}};
  for (std::size_t i = 0; i < level.size(); ++i) {
    auto [node, d] = level[i];
    total += d;
    for (NodeId c : at(node).children) level.emplace_back(c, d + 1);
  }
  return total;
}

void FeedTree::swap_with_parent(NodeId node) {
  const NodeId p = *at(node).parent;
  const NodeId g = *at(p).parent;
  auto& gkids = at(g).children;
  const auto slot_index = std::find(gkids.begin(), gkids.end(), p) - gkids.begin();
  move(node, g);
  move(p, node);
  // `node` takes over the slot `p` held under g.
  auto& kids = at(g).children;
  kids.erase(std::find(kids.begin(), kids.end(), node));
  kids.insert(kids.begin() + slot_index, node);
}

bool FeedTree::in_subtree(NodeId node, NodeId subtree_root) const {
  for (std::optional<NodeId> cur = node; cur; cur = at(*cur).parent) {
    if (*cur == subtree_root) return true;
  }
  return false;
}

void FeedTree::move(NodeId node, NodeId new_parent) {
  if (node == root_) throw std::invalid_argument("cannot move the root");
  if (in_subtree(new_parent, node)) throw std::invalid_argument("move would create a cycle");
  Entry& e = at(node);
  const std::int64_t weight = e.size;
  const NodeId old_parent = *e.parent;
  auto& siblings = at(old_parent).children;
  siblings.erase(std::find(siblings.begin(), siblings.end(), node));
  adjust_sizes(old_parent, -weight);
  e.parent = new_parent;
  at(new_parent).children.push_back(node);
  adjust_sizes(new_parent, weight);
}

std::uint32_t compute_cc(const FeedTree& tree, NodeId node) {
  if (!tree.contains(node)) throw std::out_of_range("node not in feed tree");
  std::uint32_t count = 0;
  std::vector<NodeId> stack(tree.children(node).begin(), tree.children(node).end());
  while (!stack.empty()) {
    const NodeId n = stack.back();
    stack.pop_back();
    ++count;
    const auto& kids = tree.children(n);
    stack.insert(stack.end(), kids.begin(), kids.end());
  }
  return count;
}

CcLookup exact_cc(const FeedTree& tree) {
  return [&tree](NodeId n) { return tree.cc(n); };
}

std::string_view to_string(OptimizerAction::Kind kind) {
  switch (kind) {
    case OptimizerAction::Kind::Shed:
      return "shed";
    case OptimizerAction::Kind::Promote:
      return "promote";
    case OptimizerAction::Kind::Swap:
      return "swap";
    case OptimizerAction::Kind::SwapSkipped:
      return "swap_skipped";
  }
  return "?";
}

namespace {

std::uint32_t capacity_of(const FeedTree& tree, NodeId node, const OptimizerLimits& limits) {
  if (node == tree.root()) return limits.root_capacity;
  return tree.relay(node) ? limits.max_out_degree : 0;
}

std::uint32_t out_of(const FeedTree& tree, NodeId node) {
  return static_cast<std::uint32_t>(tree.children(node).size());
}

// Brings an over-cap node back to its cap by re-hanging its lightest
// children under the shallowest relay with spare degree.
void shed(FeedTree& tree, NodeId node, const CcLookup& cc, const OptimizerLimits& limits,
          std::vector<OptimizerAction>& out, const ActionObserver& observer) {
  while (out_of(tree, node) > capacity_of(tree, node, limits)) {
    NodeId victim = tree.children(node).front();
    for (NodeId c : tree.children(node)) {
      const auto a = cc(c), b = cc(victim);
      if (a < b || (a == b && c > victim)) victim = c;
    }
    std::optional<NodeId> target;
    std::uint32_t target_depth = 0;
    std::vector<std::pair<NodeId, std::uint32_t>> level{{tree.root(), 0}};
    for (std::size_t i = 0; i < level.size(); ++i) {
      const auto [t, d] = level[i];
      if (target && d > target_depth) break;
      for (NodeId c : tree.children(t)) level.emplace_back(c, d + 1);
      if (t == node || out_of(tree, t) >= capacity_of(tree, t, limits)) continue;
      if (tree.in_subtree(t, victim)) continue;
      if (!target || t < *target) {
        target = t;
        target_depth = d;
      }
    }
    if (!target) return;
    const std::int64_t old_depth = tree.depth(victim);
    OptimizerAction a;
    a.kind = OptimizerAction::Kind::Shed;
    a.node = victim;
    a.old_parent = node;
    a.new_parent = *target;
    a.cc = cc(victim);
    a.predicted_delta = (static_cast<std::int64_t>(target_depth) + 1 - old_depth) *
                        (static_cast<std::int64_t>(a.cc) + 1);
    tree.move(victim, *target);
    out.push_back(a);
    if (observer) observer(a, tree);
  }
}

}  // namespace

std::optional<NodeId> best_grandchild(const FeedTree& tree, NodeId node, const CcLookup& cc) {
  std::optional<NodeId> best;
  std::uint32_t best_cc = 0;
  for (NodeId child : tree.children(node)) {
    for (NodeId g : tree.children(child)) {
      const std::uint32_t v = cc(g);
      if (!best || v > best_cc || (v == best_cc && g < *best)) {
        best = g;
        best_cc = v;
      }
    }
  }
  return best;
}

std::optional<OptimizerAction> fill_free_out_degree(FeedTree& tree, NodeId node,
                                                    const CcLookup& cc,
                                                    const OptimizerLimits& limits) {
  if (out_of(tree, node) >= capacity_of(tree, node, limits)) return std::nullopt;
  const auto g = best_grandchild(tree, node, cc);
  if (!g) return std::nullopt;
  OptimizerAction a;
  a.kind = OptimizerAction::Kind::Promote;
  a.node = *g;
  a.old_parent = *tree.parent(*g);
  a.new_parent = node;
  a.cc = cc(*g);
  a.predicted_delta = -(static_cast<std::int64_t>(a.cc) + 1);
  tree.move(*g, node);
  return a;
}

bool swap_eligible(const FeedTree& tree, NodeId node, const CcLookup& cc) {
  const auto p = tree.parent(node);
  if (!p || *p == tree.root()) return false;
  std::uint64_t bound = 0;
  for (NodeId s : tree.children(*p)) {
    if (s != node) bound += static_cast<std::uint64_t>(cc(s)) + 1;
  }
  return cc(node) > bound;
}

std::optional<OptimizerAction> execute_swap(FeedTree& tree, NodeId node, const CcLookup& cc,
                                            const OptimizerLimits& limits) {
  if (!swap_eligible(tree, node, cc)) return std::nullopt;
  const NodeId p = *tree.parent(node);
  const NodeId g = *tree.parent(p);

  std::int64_t bound = 0;
  for (NodeId s : tree.children(p)) {
    if (s != node) bound += static_cast<std::int64_t>(cc(s)) + 1;
  }
  OptimizerAction a;
  a.node = node;
  a.old_parent = p;
  a.new_parent = g;
  a.cc = cc(node);
  a.predicted_delta = bound - static_cast<std::int64_t>(a.cc);

  if (out_of(tree, node) + 1 > capacity_of(tree, node, limits)) {
    a.kind = OptimizerAction::Kind::SwapSkipped;
    return a;
  }
  a.kind = OptimizerAction::Kind::Swap;

  tree.swap_with_parent(node);
  return a;
}

std::vector<OptimizerAction> optimize_round(FeedTree& tree, const CcLookup& cc,
                                            const OptimizerLimits& limits,
                                            const ActionObserver& observer) {
  std::vector<OptimizerAction> actions;
  auto emit = [&](const OptimizerAction& a) {
    actions.push_back(a);
    if (observer) observer(a, tree);
  };
  for (NodeId node : tree.bfs()) {
    if (!tree.contains(node)) continue;
    std::vector<OptimizerAction> shed_actions;
    shed(tree, node, cc, limits, shed_actions, observer);
    actions.insert(actions.end(), shed_actions.begin(), shed_actions.end());
    while (auto a = fill_free_out_degree(tree, node, cc, limits)) emit(*a);

    std::optional<NodeId> pick;
    for (NodeId c : tree.children(node)) {
      if (!swap_eligible(tree, c, cc)) continue;
      if (!pick || cc(c) > cc(*pick) || (cc(c) == cc(*pick) && c < *pick)) pick = c;
    }
    if (pick) {
      if (auto a = execute_swap(tree, *pick, cc, limits)) emit(*a);
    }
  }
  return actions;
}

std::map<NodeId, std::uint32_t> CcAggregator::run(std::mt19937_64& rng) {
  const std::vector<NodeId> order = tree_.bfs();
  std::unordered_map<NodeId, std::uint32_t> reported;  // as known by the parent
  std::unordered_map<NodeId, bool> queued;
  std::vector<NodeId> pending = order;
  for (NodeId n : order) {
    reported[n] = 0;
    queued[n] = true;
  }
  auto current = [&](NodeId n) {
    std::uint32_t v = 0;
    for (NodeId c : tree_.children(n)) v += reported[c] + 1;
    return v;
  };

  while (!pending.empty()) {
    const std::size_t i = static_cast<std::size_t>(rng() % pending.size());
    const NodeId n = pending[i];
    pending[i] = pending.back();
    pending.pop_back();
    queued[n] = false;

    const auto parent = tree_.parent(n);
    if (!parent) continue;
    ++messages_;
    const std::uint32_t v = current(n);
    if (reported[n] == v) continue;
    reported[n] = v;
    if (!queued[*parent]) {
      queued[*parent] = true;
      pending.push_back(*parent);
    }
  }

  std::map<NodeId, std::uint32_t> out;
  for (NodeId n : order) out[n] = current(n);
  return out;
}

}  // namespace dualfeed
