#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "dualfeed/index_table.hpp"
#include "dualfeed/metrics.hpp"
#include "dualfeed/overlay_node.hpp"
#include "dualfeed/scenario.hpp"
#include "dualfeed/topology.hpp"
#include "dualfeed/tree_optimizer.hpp"

namespace dualfeed {

enum class EventKind : std::uint8_t {
  MessageDelivery,
  NodeJoin,
  NodeLeave,
  NodeFail,
  PlayoutTick,
  HeartbeatCheck,
  OptimizerRound,
  IndexRefresh,
  Retry,
};

std::string_view to_string(EventKind kind);

struct Event {
  Tick at = 0;
  std::uint64_t seq_no = 0;
  EventKind kind = EventKind::MessageDelivery;
  NodeId node;  // target
  NodeId from;  // sender, for deliveries
  Message msg;
  RetryKind retry = RetryKind::Poll;
};

/// Per-message latency. Seeded-random draws come from the engine's generator.
class LinkModel {
 public:
  LinkModel(LinkConfig config, std::uint64_t seed);
  Tick delay(NodeId from, NodeId to);

 private:
  LinkConfig config_;
  std::mt19937_64 rng_;
  std::map<std::pair<NodeId, NodeId>, Tick> pairs_;
};

/// Uniform double in [0, 1) from 53 random bits; stable across platforms.
double unit_uniform(std::mt19937_64& rng);
double exponential(std::mt19937_64& rng, double rate);

struct EngineStats {
  std::uint64_t events = 0;
  std::uint64_t messages = 0;
  std::uint64_t data_messages = 0;
  std::uint64_t dropped_to_dead = 0;
};

struct RunResult {
  Topology topology;
  MetricsRecord metrics;
  std::vector<TraceRecord> trace;
  EngineStats stats;
  Tick end_time = 0;
  bool quiescent = false;
  /// Set when a failure never recovered before the horizon.
  bool flagged = false;
  std::vector<std::string> flags;
};

/// Discrete-event simulation of one overlay. Events run in (tick, seq_no)
/// order; at the start of every tick the periodic events are queued behind
/// whatever was already due: heartbeat check, playout tick (the source emits
/// that tick's packet first), index refresh, optimizer round.
class Engine : public NodeEnv {
 public:
  explicit Engine(ScenarioConfig config);
  ~Engine() override;

  /// Queues the arrival, churn and failure schedule. Called by run().
  void schedule_membership();
  /// Explicit hooks; rejected (std::invalid_argument) for the source.
  void inject_failure(NodeId node, Tick at);
  void inject_leave(NodeId node, Tick at);
  void inject_join(NodeId node, Tick at);

  /// Advances until the horizon. `on_tick` runs after every processed tick.
  void run_until(Tick horizon, const std::function<void(const Engine&)>& on_tick = {});
  RunResult run(const std::function<void(const Engine&)>& on_tick = {});

  // NodeEnv
  Tick now() const override { return now_; }
  const ProtocolConfig& protocol() const override { return protocol_; }
  IndexTable& index() override { return index_; }
  void send(NodeId from, NodeId to, const Message& msg, Tick extra_delay = 0) override;
  void schedule_retry(NodeId node, RetryKind kind, FeedId feed, std::uint64_t attempt,
                      Tick at) override;
  OverlayNode* live_peer(NodeId id) override;
  void note(const ProtocolNote& note) override;

  const ScenarioConfig& config() const { return config_; }
  const IndexTable& index_table() const { return index_; }
  const OverlayNode* node(NodeId id) const;
  std::vector<const OverlayNode*> live_nodes() const;
  Topology snapshot() const;
  const std::vector<TraceRecord>& trace() const { return trace_; }
  const EngineStats& stats() const { return stats_; }
  /// No retries, recoveries, pending attaches, joins or control messages outstanding.
  bool quiescent() const;
  MetricsRecord metrics() const;

 private:
  OverlayNode* ensure_node(NodeId id);
  void push(Event ev);
  void queue_periodic(Tick t);
  void dispatch(const Event& ev);
  void handle_join(NodeId id);
  void handle_leave(NodeId id);
  void handle_fail(NodeId id);
  void heartbeat_check();
  void playout_tick();
  void index_refresh();
  void optimizer_round();
  void optimize_feed(FeedId feed);
  std::uint32_t subtree_size(NodeId root, FeedId feed);
  void record(std::string_view action, NodeId node, std::optional<NodeId> peer,
              std::optional<FeedId> feed, std::int64_t value);

  ScenarioConfig config_;
  ProtocolConfig protocol_;
  IndexTable index_;
  LinkModel links_;
  std::mt19937_64 schedule_rng_;

  std::vector<std::unique_ptr<OverlayNode>> nodes_;  // indexed by id; null until joined
  std::vector<bool> failed_before_join_;
  std::map<Tick, std::vector<Event>> queue_;
  std::uint64_t next_seq_ = 0;
  Tick now_ = 0;
  Tick next_periodic_ = 0;
  std::uint64_t current_seq_ = 0;
  EventKind current_kind_ = EventKind::PlayoutTick;
  std::uint64_t inflight_control_ = 0;
  bool scheduled_ = false;

  std::vector<TraceRecord> trace_;
  std::vector<std::size_t> failure_records_;  // indices into trace_
  EngineStats stats_;
};

/// Builds and runs one engine over `config`.
RunResult run_scenario(const ScenarioConfig& config,
                       const std::function<void(const Engine&)>& on_tick = {});

}  // namespace dualfeed
