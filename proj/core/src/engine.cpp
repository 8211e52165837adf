#include "dualfeed/engine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace dualfeed {

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::MessageDelivery:
      return "MessageDelivery";
    case EventKind::NodeJoin:
      return "NodeJoin";
    case EventKind::NodeLeave:
      return "NodeLeave";
    case EventKind::NodeFail:
      return "NodeFail";
    case EventKind::PlayoutTick:
      return "PlayoutTick";
    case EventKind::HeartbeatCheck:
      return "HeartbeatCheck";
    case EventKind::OptimizerRound:
      return "OptimizerRound";
    case EventKind::IndexRefresh:
      return "IndexRefresh";
    case EventKind::Retry:
      return "Retry";
  }
  return "?";
}

double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double exponential(std::mt19937_64& rng, double rate) {
  return -std::log(1.0 - unit_uniform(rng)) / rate;
}

LinkModel::LinkModel(LinkConfig config, std::uint64_t seed)
    : config_(std::move(config)), rng_(seed) {
  for (const LinkPair& p : config_.pairs) {
    pairs_[{std::min(p.a, p.b), std::max(p.a, p.b)}] = p.delay;
  }
}

Tick LinkModel::delay(NodeId from, NodeId to) {
  switch (config_.mode) {
    case LinkMode::Uniform:
      return config_.base_delay;
    case LinkMode::PerPair: {
      auto it = pairs_.find({std::min(from, to), std::max(from, to)});
      return it == pairs_.end() ? config_.base_delay : it->second;
    }
    case LinkMode::SeededRandom:
      if (config_.jitter <= 0) return config_.base_delay;
      return config_.base_delay +
             static_cast<Tick>(rng_() % static_cast<std::uint64_t>(config_.jitter + 1));
  }
  return config_.base_delay;
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::uint64_t kLinkSeedSalt = 0x9e3779b97f4a7c15ULL;

bool is_control(MessageType t) { return t != MessageType::Data && t != MessageType::CcReport; }

}  // namespace

Engine::Engine(ScenarioConfig config)
    : config_(std::move(config)),
      protocol_(config_.protocol()),
      index_(kSourceId, config_.index()),
      links_(config_.link, config_.seed ^ kLinkSeedSalt),
      schedule_rng_(config_.seed) {
  nodes_.resize(static_cast<std::size_t>(config_.node_count) + 1);
  failed_before_join_.assign(nodes_.size(), false);
  nodes_[0] = std::make_unique<OverlayNode>(kSourceId, true, config_.playout_lag);
}

Engine::~Engine() = default;

OverlayNode* Engine::ensure_node(NodeId id) {
  if (id.value >= nodes_.size()) {
    nodes_.resize(id.value + 1);
    failed_before_join_.resize(id.value + 1, false);
  }
  auto& slot_ptr = nodes_[id.value];
  if (!slot_ptr) slot_ptr = std::make_unique<OverlayNode>(id, false, config_.playout_lag);
  return slot_ptr.get();
}

const OverlayNode* Engine::node(NodeId id) const {
  return id.value < nodes_.size() ? nodes_[id.value].get() : nullptr;
}

OverlayNode* Engine::live_peer(NodeId id) {
  if (id.value >= nodes_.size()) return nullptr;
  OverlayNode* n = nodes_[id.value].get();
  return n && n->state().alive() ? n : nullptr;
}

std::vector<const OverlayNode*> Engine::live_nodes() const {
  std::vector<const OverlayNode*> out;
  for (const auto& n : nodes_) {
    if (n && n->state().alive()) out.push_back(n.get());
  }
  return out;
}

void Engine::push(Event ev) {
  ev.seq_no = next_seq_++;
  if (ev.at < now_) ev.at = now_;
  queue_[ev.at].push_back(std::move(ev));
}

void Engine::inject_join(NodeId node, Tick at) {
  if (node == kSourceId) throw std::invalid_argument("the source is always present");
  Event ev;
  ev.at = at;
  ev.kind = EventKind::NodeJoin;
  ev.node = node;
  push(ev);
}

void Engine::inject_failure(NodeId node, Tick at) {
  if (node == kSourceId) throw std::invalid_argument("the source cannot fail");
  Event ev;
  ev.at = at;
  ev.kind = EventKind::NodeFail;
  ev.node = node;
  push(ev);
}

void Engine::inject_leave(NodeId node, Tick at) {
  if (node == kSourceId) throw std::invalid_argument("the source cannot leave");
  Event ev;
  ev.at = at;
  ev.kind = EventKind::NodeLeave;
  ev.node = node;
  push(ev);
}

void Engine::schedule_membership() {
  if (scheduled_) return;
  scheduled_ = true;
  const std::uint32_t n = config_.node_count;
  std::vector<Tick> arrival(n + 1, 0);

  double clock = static_cast<double>(config_.join_start);
  for (std::uint32_t i = 1; i <= n; ++i) {
    if (config_.arrival_process == ArrivalProcess::Fixed) {
      arrival[i] = config_.join_start + static_cast<Tick>(i - 1) * config_.join_interval;
    } else {
      clock += exponential(schedule_rng_, config_.arrival_rate);
      arrival[i] = static_cast<Tick>(std::floor(clock));
    }
    if (arrival[i] <= config_.horizon) inject_join(NodeId{i}, arrival[i]);
  }

  if (config_.mean_lifetime > 0.0) {
    std::uint32_t churn = 0;
    for (std::uint32_t i = 1; i <= n; ++i) {
      const double life = exponential(schedule_rng_, 1.0 / config_.mean_lifetime);
      const bool abrupt = unit_uniform(schedule_rng_) < config_.departure_failure_fraction;
      const Tick at = arrival[i] + std::max<Tick>(1, static_cast<Tick>(std::ceil(life)));
      if (at > config_.horizon) continue;
      if (config_.max_churn_events != 0 && churn >= config_.max_churn_events) continue;
      ++churn;
      if (abrupt) {
        inject_failure(NodeId{i}, at);
      } else {
        inject_leave(NodeId{i}, at);
      }
    }
  }

  if (config_.random_failure_fraction > 0.0 && n > 0) {
    const auto k = static_cast<std::uint32_t>(std::lround(config_.random_failure_fraction * n));
    std::vector<std::uint32_t> ids(n);
    for (std::uint32_t i = 0; i < n; ++i) ids[i] = i + 1;
    const Tick lo = config_.random_failure_start;
    const Tick hi = config_.random_failure_end > 0 ? config_.random_failure_end : config_.horizon;
    for (std::uint32_t j = 0; j < k && j < n; ++j) {
      const std::uint64_t pick = j + schedule_rng_() % (n - j);
      std::swap(ids[j], ids[pick]);
      const std::uint32_t id = ids[j];
      Tick at = lo + static_cast<Tick>(unit_uniform(schedule_rng_) * static_cast<double>(hi - lo + 1));
      at = std::max(at, arrival[id] + 1);
      if (at <= config_.horizon) inject_failure(NodeId{id}, at);
    }
  }

  for (const ScheduledEvent& e : config_.failures) inject_failure(e.node, e.at);
  for (const ScheduledEvent& e : config_.leaves) inject_leave(e.node, e.at);
}

void Engine::send(NodeId from, NodeId to, const Message& msg, Tick extra_delay) {
  Event ev;
  ev.at = now_ + links_.delay(from, to) + extra_delay;
  ev.kind = EventKind::MessageDelivery;
  ev.node = to;
  ev.from = from;
  ev.msg = msg;
  ++stats_.messages;
  if (msg.type == MessageType::Data) ++stats_.data_messages;
  if (is_control(msg.type)) ++inflight_control_;
  push(std::move(ev));
}

void Engine::schedule_retry(NodeId node, RetryKind kind, FeedId feed, std::uint64_t attempt,
                            Tick at) {
  Event ev;
  ev.at = at;
  ev.kind = EventKind::Retry;
  ev.node = node;
  ev.retry = kind;
  ev.msg.feed = feed;
  ev.msg.attempt = attempt;
  push(ev);
}

void Engine::record(std::string_view action, NodeId node, std::optional<NodeId> peer,
                    std::optional<FeedId> feed, std::int64_t value) {
  trace_.push_back(TraceRecord{now_, current_seq_, to_string(current_kind_), action, node, peer, feed, value});
}

void Engine::note(const ProtocolNote& n) { record(n.action, n.node, n.peer, n.feed, n.value); }

void Engine::queue_periodic(Tick t) {
  Event ev;
  ev.at = t;
  ev.kind = EventKind::HeartbeatCheck;
  push(ev);
  ev.kind = EventKind::PlayoutTick;
  push(ev);
  const Tick refresh_step = std::max<Tick>(1, config_.refresh_ttl / 2);
  if (t % refresh_step == 0) {
    ev.kind = EventKind::IndexRefresh;
    push(ev);
  }
  if (config_.optimizer_period > 0 && t > 0 && t % config_.optimizer_period == 0) {
    ev.kind = EventKind::OptimizerRound;
    push(ev);
  }
}

void Engine::run_until(Tick horizon, const std::function<void(const Engine&)>& on_tick) {
  schedule_membership();
  for (Tick t = next_periodic_; t <= horizon; ++t) {
    now_ = t;
    queue_periodic(t);
    auto bucket = queue_.find(t);
    for (std::size_t i = 0; i < bucket->second.size(); ++i) {
      const Event ev = bucket->second[i];
      dispatch(ev);
    }
    queue_.erase(bucket);
    if (on_tick) on_tick(*this);
  }
  next_periodic_ = std::max(next_periodic_, horizon + 1);
}

void Engine::dispatch(const Event& ev) {
  ++stats_.events;
  current_seq_ = ev.seq_no;
  current_kind_ = ev.kind;
  switch (ev.kind) {
    case EventKind::MessageDelivery: {
      if (is_control(ev.msg.type)) --inflight_control_;
      OverlayNode* target = live_peer(ev.node);
      if (!target) {
        ++stats_.dropped_to_dead;
        return;
      }
      target->on_message(*this, ev.from, ev.msg);
      return;
    }
    case EventKind::NodeJoin:
      handle_join(ev.node);
      return;
    case EventKind::NodeLeave:
      handle_leave(ev.node);
      return;
    case EventKind::NodeFail:
      handle_fail(ev.node);
      return;
    case EventKind::PlayoutTick:
      playout_tick();
      return;
    case EventKind::HeartbeatCheck:
      heartbeat_check();
      return;
    case EventKind::OptimizerRound:
      optimizer_round();
      return;
    case EventKind::IndexRefresh:
      index_refresh();
      return;
    case EventKind::Retry:
      if (OverlayNode* target = live_peer(ev.node)) {
        target->on_retry(*this, ev.retry, ev.msg.feed, ev.msg.attempt);
      }
      return;
  }
}

void Engine::handle_join(NodeId id) {
  if (id.value < failed_before_join_.size() && failed_before_join_[id.value]) return;
  if (id.value < nodes_.size() && nodes_[id.value]) return;
  OverlayNode* n = ensure_node(id);
  record("arrive", id, std::nullopt, std::nullopt, 0);
  n->begin_join(*this);
}

void Engine::handle_leave(NodeId id) {
  if (OverlayNode* n = live_peer(id)) n->leave_gracefully(*this);
}

void Engine::handle_fail(NodeId id) {
  if (id == kSourceId) return;
  OverlayNode* n = live_peer(id);
  if (!n) {
    if (id.value < nodes_.size() && nodes_[id.value]) return;  // already gone
    ensure_node(id);
    failed_before_join_[id.value] = true;
    nodes_[id.value]->fail();
    failure_records_.push_back(trace_.size());
    record("fail", id, std::nullopt, std::nullopt, 0);
    return;
  }
  const auto feed = n->state().forwarded_feed;
  const std::uint32_t affected = feed ? subtree_size(id, *feed) : 0;
  failure_records_.push_back(trace_.size());
  record("fail", id, std::nullopt, feed, affected);
  if (feed) {
    for (const ChildEntry& c : n->state().children[slot(*feed)]) {
      const OverlayNode* child = live_peer(c.id);
      if (child && child->state().link[slot(*feed)].parent == id) record("orphaned", c.id, id, feed, 0);
    }
  }
  n->fail();
}

std::uint32_t Engine::subtree_size(NodeId root, FeedId feed) {
  std::uint32_t count = 0;
  std::vector<NodeId> stack{root};
  while (!stack.empty()) {
    const NodeId cur = stack.back();
    stack.pop_back();
    const OverlayNode* n = live_peer(cur);
    if (!n) continue;
    for (const ChildEntry& c : n->state().children[slot(feed)]) {
      const OverlayNode* child = live_peer(c.id);
      if (child && child->state().link[slot(feed)].parent == cur) {
        ++count;
        stack.push_back(c.id);
      }
    }
  }
  return count;
}

void Engine::heartbeat_check() {
  const bool report = now_ % config_.cc_report_period == 0;
  const std::size_t count = nodes_.size();
  if (report) {
    for (std::size_t i = 0; i < count; ++i) {
      if (OverlayNode* n = live_peer(NodeId{static_cast<std::uint32_t>(i)})) n->send_reports(*this);
    }
    for (std::size_t i = 0; i < count; ++i) {
      if (OverlayNode* n = live_peer(NodeId{static_cast<std::uint32_t>(i)})) n->reap_children(*this);
    }
  }
  for (std::size_t i = 1; i < count; ++i) {
    if (OverlayNode* n = live_peer(NodeId{static_cast<std::uint32_t>(i)})) n->check_heartbeats(*this);
  }
}

void Engine::playout_tick() {
  nodes_[0]->emit(*this, now_);
  for (std::size_t i = 1; i < nodes_.size(); ++i) {
    if (OverlayNode* n = live_peer(NodeId{static_cast<std::uint32_t>(i)})) n->playout_tick();
  }
}

void Engine::index_refresh() {
  for (std::size_t i = 1; i < nodes_.size(); ++i) {
    if (OverlayNode* n = live_peer(NodeId{static_cast<std::uint32_t>(i)})) {
      n->refresh_advertisement(*this);
    }
  }
  for (NodeId gone : index_.expire_stale(now_)) record("index_expired", gone, std::nullopt, std::nullopt, 0);
}

void Engine::optimizer_round() {
  for (FeedId f : kFeeds) optimize_feed(f);
}

void Engine::optimize_feed(FeedId feed) {
  FeedTree tree(kSourceId);
  std::vector<NodeId> order{kSourceId};
  for (std::size_t i = 0; i < order.size(); ++i) {
    const OverlayNode* parent = live_peer(order[i]);
    for (const ChildEntry& c : parent->state().children[slot(feed)]) {
      const OverlayNode* child = live_peer(c.id);
      if (!child || tree.contains(c.id)) continue;
      const FeedLink& l = child->state().link[slot(feed)];
      if (l.parent != order[i] || l.interrupted || l.pending) continue;
      tree.add_child(order[i], c.id, child->state().forwarded_feed == feed);
      order.push_back(c.id);
    }
  }

  std::unordered_map<NodeId, NodeId> before;
  for (NodeId n : order) {
    if (auto p = tree.parent(n)) before[n] = *p;
  }
  // Decisions use the cumulative counts the nodes have heard from their
  // children, however stale.
  const CcLookup lookup = [&](NodeId n) -> std::uint32_t {
    const NodeState& s = nodes_[n.value]->state();
    return (s.is_source || s.forwarded_feed == feed) ? s.cached_cc(feed) : 0;
  };
  OptimizerLimits limits{config_.max_out_degree, config_.source_per_feed_capacity};
  const auto actions = optimize_round(tree, lookup, limits);
  if (actions.empty()) return;
  for (const OptimizerAction& a : actions) {
    record(to_string(a.kind), a.node, a.new_parent, feed, a.predicted_delta);
  }

  // Apply the rewiring: move child entries, then refresh parent, grandparent
  // and hop count for every node in the tree.
  for (NodeId n : order) {
    auto it = before.find(n);
    if (it == before.end()) continue;
    const NodeId now_parent = *tree.parent(n);
    if (now_parent == it->second) continue;
    ChildEntry entry{n, 0, now_, nodes_[n.value]->state().forwarded_feed == feed};
    if (auto released = nodes_[it->second.value]->release_child(*this, feed, n)) {
      entry.reported_cc = released->reported_cc;
    }
    nodes_[now_parent.value]->adopt_child(*this, feed, entry);
    nodes_[n.value]->mutable_state().link[slot(feed)].last_heartbeat = now_;
  }
  std::unordered_map<NodeId, std::uint32_t> depth{{kSourceId, 0}};
  for (NodeId n : tree.bfs()) {
    const auto p = tree.parent(n);
    if (!p) continue;
    depth[n] = depth[*p] + 1;
    nodes_[n.value]->set_parent(feed, *p, tree.parent(*p), depth[n]);
  }
}

Topology Engine::snapshot() const {
  Topology topo;
  for (const auto& n : nodes_) {
    if (!n || !n->state().alive()) continue;
    const NodeState& s = n->state();
    NodeSnapshot snap;
    snap.id = s.id;
    snap.is_source = s.is_source;
    snap.forwarded_feed = s.forwarded_feed;
    for (FeedId f : kFeeds) {
      snap.parent[slot(f)] = s.link[slot(f)].parent;
      for (const ChildEntry& c : s.children[slot(f)]) snap.children[slot(f)].push_back(c.id);
    }
    topo.nodes.emplace(s.id, std::move(snap));
  }
  return topo;
}

bool Engine::quiescent() const {
  if (inflight_control_ != 0) return false;
  for (const auto& n : nodes_) {
    if (!n || !n->state().alive()) continue;
    const NodeState& s = n->state();
    if (s.is_source) continue;
    if (s.life != Lifecycle::Active || s.held(now_) || s.ineligible(now_) || s.withdrawn) return false;
    for (const FeedLink& l : s.link) {
      if (!l.parent || l.pending || l.recovery || l.interrupted || l.awaiting_resume) return false;
    }
  }
  return true;
}

MetricsRecord Engine::metrics() const {
  MetricsRecord m;
  const Topology topo = snapshot();
  const HopMetrics hops = hop_metrics(topo);
  m.hop_diff_histogram = hops.diff_histogram;
  for (const HopRecord& h : hops.nodes) {
    const NodeState& s = nodes_[h.node.value]->state();
    NodeMetrics nm;
    nm.node = h.node;
    nm.hop_f1 = h.hop_f1;
    nm.hop_f2 = h.hop_f2;
    nm.hop_diff = h.hop_diff;
    nm.max_occupancy = s.buffer.max_occupancy();
    nm.underruns = s.buffer.underruns();
    m.nodes.push_back(nm);
    ++m.out_degree_histogram[s.out_degree()];
  }
  for (std::size_t idx : failure_records_) {
    RecoveryRecord rec = recovery_metrics(trace_, trace_[idx]);
    // Too close to the end of the run to call it unbounded.
    rec.censored = rec.unbounded() &&
                   rec.fail_time + config_.failure_timeout + config_.transition_duration > now_;
    m.recoveries.push_back(rec);
  }
  return m;
}

RunResult Engine::run(const std::function<void(const Engine&)>& on_tick) {
  run_until(config_.horizon, on_tick);
  RunResult r;
  r.topology = snapshot();
  r.metrics = metrics();
  r.trace = trace_;
  r.stats = stats_;
  r.end_time = now_;
  r.quiescent = quiescent();
  for (const RecoveryRecord& rec : r.metrics.recoveries) {
    if (rec.unbounded() && !rec.censored) {
      r.flagged = true;
      r.flags.push_back("unbounded recovery after failure of node " + std::to_string(rec.failure_node.value) +
                        " at t=" + std::to_string(rec.fail_time));
    }
  }
  return r;
}

RunResult run_scenario(const ScenarioConfig& config, const std::function<void(const Engine&)>& on_tick) {
  Engine engine(config);
  return engine.run(on_tick);
}

}  // namespace dualfeed
