#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "dualfeed/index_table.hpp"
#include "dualfeed/playout_buffer.hpp"
#include "dualfeed/types.hpp"

namespace dualfeed {

enum class MessageType : std::uint8_t {
  Data,
  AttachRequest,
  AttachAccept,
  AttachRedirect,
  AttachRefuse,
  Detach,
  ParentInfo,
  Republish,
  LeaveNotice,
  CcReport,
};

std::string_view to_string(MessageType t);

/// Protocol message. Field use depends on `type`:
///   Data           seq
///   AttachRequest  attempt, recovery, value = redirects used so far
///   AttachAccept   attempt, peer = acceptor's parent (requester's grandparent), value = acceptor hops
///   AttachRedirect attempt, peer = next candidate
///   AttachRefuse   attempt
///   ParentInfo     peer = sender's parent, value = sender hops
///   LeaveNotice    peer = leaver's parent (the suggested successor)
///   CcReport       value = reporter's cumulative children count
struct Message {
  MessageType type = MessageType::Data;
  FeedId feed = FeedId::F1;
  PacketSeq seq = 0;
  std::uint64_t attempt = 0;
  std::optional<NodeId> peer;
  std::uint32_t value = 0;
  bool recovery = false;
  /// Feed the requester relays, carried on attach requests.
  std::optional<FeedId> forwards;
};

struct ProtocolConfig {
  std::uint32_t max_out_degree = 3;
  std::uint32_t source_capacity = 1;
  Strategy strategy = Strategy::Ine;
  Tick transition_duration = 30;
  Tick failure_timeout = 3;
  std::uint32_t playout_lag = 1;
  Tick poll_interval = 5;
  Tick attach_timeout = 3;
  std::uint32_t max_redirects = 2;
  Tick child_timeout = 30;
  Tick index_latency = 0;
};

enum class RetryKind : std::uint8_t { AttachTimeout, Poll, JoinRetry };

enum class Lifecycle : std::uint8_t { Joining, Active, Departed, Failed };

enum class AttachPurpose : std::uint8_t { Join, Poll, Reattach };

/// Structured protocol record; the engine stamps time and event ordering.
struct ProtocolNote {
  std::string_view action;
  NodeId node;
  std::optional<NodeId> peer;
  std::optional<FeedId> feed;
  std::int64_t value = 0;
};

class OverlayNode;

/// Everything a node can do to the outside world. Implemented by the engine.
class NodeEnv {
 public:
  virtual ~NodeEnv() = default;

  virtual Tick now() const = 0;
  virtual const ProtocolConfig& protocol() const = 0;
  virtual IndexTable& index() = 0;
  virtual void send(NodeId from, NodeId to, const Message& msg, Tick extra_delay = 0) = 0;
  virtual void schedule_retry(NodeId node, RetryKind kind, FeedId feed, std::uint64_t attempt,
                              Tick at) = 0;
  /// Live node lookup for zero-latency subtree broadcasts; nullptr when the
  /// node is unknown, departed, or failed.
  virtual OverlayNode* live_peer(NodeId id) = 0;
  virtual void note(const ProtocolNote& note) = 0;
};

struct ChildEntry {
  NodeId id;
  std::uint32_t reported_cc = 0;
  Tick last_seen = 0;
  /// The child forwards this feed onward.
  bool relay = false;
};

struct PendingAttach {
  NodeId target;
  std::uint64_t attempt = 0;
  std::uint32_t redirects = 0;
  AttachPurpose purpose = AttachPurpose::Join;
  std::vector<NodeId> tried;
};

/// Bookkeeping held by the root of an orphaned subtree until it is re-fed.
struct RecoveryContext {
  PacketSeq resume_after = -1;
  Tick window_until = 0;
  Strategy strategy = Strategy::Ine;
  bool republish = false;
};

/// Reception state for one feed.
struct FeedLink {
  std::optional<NodeId> parent;
  std::optional<NodeId> grandparent;
  std::optional<NodeId> previous_parent;
  Tick last_heartbeat = 0;
  PacketSeq last_seq = -1;
  std::uint32_t hops = 0;
  std::optional<PendingAttach> pending;
  std::optional<RecoveryContext> recovery;
  // Set on every member below an orphan root; silences failure detection
  // until a packet newer than `resume_after` arrives.
  bool interrupted = false;
  Tick interrupted_until = 0;
  PacketSeq resume_after = -1;
  bool awaiting_resume = false;
};

struct NodeState {
  NodeId id;
  bool is_source = false;
  Lifecycle life = Lifecycle::Joining;
  std::array<FeedLink, 2> link;
  std::optional<FeedId> forwarded_feed;
  // Only the forwarded feed's slot is populated, except at the source.
  std::array<std::vector<ChildEntry>, 2> children;
  PlayoutBuffer buffer;
  bool registered = false;
  bool withdrawn = false;
  Tick hold_until = kNever;
  Tick ineligible_until = kNever;
  Tick joined_at = 0;
  std::uint64_t next_attempt = 0;
  std::uint64_t anomalies = 0;

  explicit NodeState(NodeId node_id, std::uint32_t playout_lag = 1)
      : id(node_id), buffer(playout_lag) {}

  bool alive() const { return life == Lifecycle::Joining || life == Lifecycle::Active; }
  bool held(Tick now) const { return now < hold_until; }
  bool ineligible(Tick now) const { return now < ineligible_until; }
  /// Currently receiving `feed` from an upstream that is itself fed.
  bool fed(FeedId feed) const;
  std::uint32_t out_degree(FeedId feed) const {
    return static_cast<std::uint32_t>(children[slot(feed)].size());
  }
  std::uint32_t out_degree() const;
  std::uint32_t in_degree() const;
  bool has_child(FeedId feed, NodeId child) const;
  std::uint32_t relay_children(FeedId feed) const;
  /// Cumulative children in the forwarded feed tree from the children's reports.
  std::uint32_t cached_cc(FeedId feed) const;
  std::uint32_t capacity(FeedId feed, const ProtocolConfig& cfg) const;
};

enum class AttachDecision : std::uint8_t { Accept, Redirect, Refuse };

struct AttachReply {
  AttachDecision decision = AttachDecision::Refuse;
  std::optional<NodeId> redirect_to;
};

/// Admission rule for an incoming feed request.
///
/// Accepts when the target is not held, is serving `feed` (the source, or a
/// fed forwarder of exactly that feed), and has free out-degree. Recovery
/// requests may exceed the cap and get past an INE tag; fresh requests to a
/// tagged node are refused. Otherwise the target
/// points the requester at its own parent for `feed`, or refuses when it has
/// none. The source keeps its slots for forwarders of the requested feed,
/// except during recovery.
AttachReply grandparent_redirect(const NodeState& target, NodeId requester,
                                 std::optional<FeedId> requester_forwards, FeedId feed,
                                 bool recovery, Tick now, const ProtocolConfig& cfg);

class OverlayNode {
 public:
  OverlayNode(NodeId id, bool is_source, std::uint32_t playout_lag);

  const NodeState& state() const { return state_; }
  NodeState& mutable_state() { return state_; }
  NodeId id() const { return state_.id; }

  /// Queries the index once per feed, sends attach requests, registers as a
  /// forwarder and schedules polls for any feed that had no source. Backs off
  /// without state change when neither feed has a source.
  void begin_join(NodeEnv& env);

  void on_message(NodeEnv& env, NodeId from, const Message& msg);
  void on_retry(NodeEnv& env, RetryKind kind, FeedId feed, std::uint64_t attempt);

  void on_data_packet(NodeEnv& env, NodeId from, PacketSeq seq, FeedId via);
  PlayoutResult playout_tick();

  /// Source only: push packet `seq` on both feeds.
  void emit(NodeEnv& env, PacketSeq seq);

  /// Declares parents failed after `failure_timeout` ticks of silence.
  void check_heartbeats(NodeEnv& env);
  void handle_parent_loss(NodeEnv& env, FeedId feed);
  void reattach_feed(NodeEnv& env, FeedId feed);

  /// Returns false (no state change) for the source.
  bool leave_gracefully(NodeEnv& env);
  void fail();

  /// Keepalive plus cumulative-children report to both parents.
  void send_reports(NodeEnv& env);
  void reap_children(NodeEnv& env);
  void refresh_advertisement(NodeEnv& env);

  /// Topology edits used by the optimizer (zero-latency, coordinated by the
  /// engine). Keeps the index in sync.
  void adopt_child(NodeEnv& env, FeedId feed, ChildEntry entry);
  std::optional<ChildEntry> release_child(NodeEnv& env, FeedId feed, NodeId child);
  void set_parent(FeedId feed, NodeId parent, std::optional<NodeId> grandparent,
                  std::uint32_t hops);
  void set_grandparent(FeedId feed, std::optional<NodeId> grandparent) {
    state_.link[slot(feed)].grandparent = grandparent;
  }
  void sync_index(NodeEnv& env);

 private:
  void publish(NodeEnv& env);
  void start_attach(NodeEnv& env, FeedId feed, AttachPurpose purpose,
                    std::optional<NodeId> avoid = std::nullopt);
  void send_request(NodeEnv& env, FeedId feed, NodeId target, Tick extra_delay);
  void query_and_request(NodeEnv& env, FeedId feed);
  void attach_exhausted(NodeEnv& env, FeedId feed);
  void apply_subtree_marks(NodeEnv& env, FeedId feed, Strategy strategy, Tick until,
                           PacketSeq resume_after, bool include_self_flag);
  void finish_attach(NodeEnv& env, FeedId feed, NodeId parent, const Message& accept);
  void push_parent_info(NodeEnv& env, FeedId feed);
  void cascade_republish(NodeEnv& env, FeedId feed);

  void handle_attach_request(NodeEnv& env, NodeId from, const Message& msg);
  void handle_accept(NodeEnv& env, NodeId from, const Message& msg);
  void handle_redirect(NodeEnv& env, NodeId from, const Message& msg);
  void handle_refuse(NodeEnv& env, NodeId from, const Message& msg);
  void handle_leave_notice(NodeEnv& env, NodeId from, const Message& msg);

  NodeState state_;
};

}  // namespace dualfeed
