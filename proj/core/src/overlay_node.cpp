#include "dualfeed/overlay_node.hpp"

#include <algorithm>

namespace dualfeed {

std::string_view to_string(MessageType t) {
  switch (t) {
    case MessageType::Data:
      return "data";
    case MessageType::AttachRequest:
      return "attach_request";
    case MessageType::AttachAccept:
      return "attach_accept";
    case MessageType::AttachRedirect:
      return "attach_redirect";
    case MessageType::AttachRefuse:
      return "attach_refuse";
    case MessageType::Detach:
      return "detach";
    case MessageType::ParentInfo:
      return "parent_info";
    case MessageType::Republish:
      return "republish";
    case MessageType::LeaveNotice:
      return "leave_notice";
    case MessageType::CcReport:
      return "cc_report";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// NodeState

bool NodeState::fed(FeedId feed) const {
  if (is_source) return true;
  const FeedLink& l = link[slot(feed)];
  return l.parent.has_value() && !l.interrupted;
}

std::uint32_t NodeState::out_degree() const { return out_degree(FeedId::F1) + out_degree(FeedId::F2); }

std::uint32_t NodeState::in_degree() const {
  return (link[0].parent ? 1u : 0u) + (link[1].parent ? 1u : 0u);
}

bool NodeState::has_child(FeedId feed, NodeId child) const {
  const auto& list = children[slot(feed)];
  return std::any_of(list.begin(), list.end(), [&](const ChildEntry& e) { return e.id == child; });
}

std::uint32_t NodeState::relay_children(FeedId feed) const {
  const auto& list = children[slot(feed)];
  return static_cast<std::uint32_t>(
      std::count_if(list.begin(), list.end(), [](const ChildEntry& e) { return e.relay; }));
}

std::uint32_t NodeState::cached_cc(FeedId feed) const {
  std::uint32_t cc = 0;
  for (const ChildEntry& e : children[slot(feed)]) cc += e.reported_cc + 1;
  return cc;
}

std::uint32_t NodeState::capacity(FeedId, const ProtocolConfig& cfg) const {
  return is_source ? cfg.source_capacity : cfg.max_out_degree;
}

// ---------------------------------------------------------------------------
// Admission

AttachReply grandparent_redirect(const NodeState& target, NodeId requester,
                                 std::optional<FeedId> requester_forwards, FeedId feed,
                                 bool recovery, Tick now, const ProtocolConfig& cfg) {
  const FeedLink& link = target.link[slot(feed)];
  auto redirect_or_refuse = [&]() -> AttachReply {
    if (link.parent && *link.parent != requester) {
      return {AttachDecision::Redirect, link.parent};
    }
    return {AttachDecision::Refuse, std::nullopt};
  };

  if (!target.alive() || requester == target.id) return {};
  const bool has_room = target.out_degree(feed) < target.capacity(feed, cfg) ||
                        target.has_child(feed, requester);
  if (target.is_source) {
    if (recovery) return {AttachDecision::Accept, std::nullopt};
    // Source slots go to forwarders of the feed. Leaves parked here by
    // recovery do not use one up; the optimizer moves them off.
    const bool admit = (requester_forwards == feed && target.relay_children(feed) < cfg.source_capacity) ||
                       target.has_child(feed, requester);
    return admit ? AttachReply{AttachDecision::Accept, std::nullopt} : AttachReply{};
  }
  if (target.held(now)) return redirect_or_refuse();
  // Serving one of our own upstream nodes would close a loop.
  if (link.parent == requester || link.grandparent == requester) return {};
  if (target.forwarded_feed != feed) return redirect_or_refuse();
  if (!target.fed(feed)) return {};
  // The tag hides a node from fresh joiners; a fed node can still take back
  // orphans asking it directly.
  if (target.ineligible(now) && !recovery) return {};
  if (has_room || recovery) return {AttachDecision::Accept, std::nullopt};
  return redirect_or_refuse();
}

// ---------------------------------------------------------------------------
// OverlayNode

OverlayNode::OverlayNode(NodeId id, bool is_source, std::uint32_t playout_lag)
    : state_(id, playout_lag) {
  state_.is_source = is_source;
  if (is_source) state_.life = Lifecycle::Active;
}

void OverlayNode::publish(NodeEnv& env) {
  PeerRecord rec;
  rec.peer_id = state_.id;
  rec.willing_feed = state_.forwarded_feed;
  rec.out_degree = state_.out_degree();
  rec.parent_f1 = state_.link[0].parent;
  rec.parent_f2 = state_.link[1].parent;
  rec.hops = state_.forwarded_feed ? state_.link[slot(*state_.forwarded_feed)].hops : 0;
  // Re-registering after the record expired must not drop an active tag.
  if (state_.ineligible(env.now())) rec.ineligible_until = state_.ineligible_until;
  env.index().publish(rec, env.now());
  state_.registered = true;
  state_.withdrawn = false;
}

void OverlayNode::sync_index(NodeEnv& env) {
  if (state_.is_source) {
    for (FeedId f : kFeeds) env.index().set_source_out_degree(f, state_.relay_children(f));
  } else if (state_.registered && state_.alive()) {
    publish(env);
  }
}

void OverlayNode::refresh_advertisement(NodeEnv& env) {
  if (state_.is_source || (state_.registered && state_.alive())) sync_index(env);
}

void OverlayNode::begin_join(NodeEnv& env) {
  if (state_.life != Lifecycle::Joining) return;
  const Tick now = env.now();
  const ProtocolConfig& cfg = env.protocol();
  IndexTable& index = env.index();

  std::array<std::optional<PeerRecord>, 2> found;
  found[0] = index.refer(FeedId::F1, state_.id, now);
  std::vector<NodeId> exclude;
  if (found[0]) exclude.push_back(found[0]->peer_id);
  found[1] = index.refer(FeedId::F2, state_.id, now, exclude);

  if (!found[0] && !found[1]) {
    env.note({"join_backoff", state_.id, std::nullopt, std::nullopt, 0});
    env.schedule_retry(state_.id, RetryKind::JoinRetry, FeedId::F1, 0, now + cfg.poll_interval);
    return;
  }

  state_.life = Lifecycle::Active;
  state_.joined_at = now;
  state_.forwarded_feed = index.assign_forward_feed();
  publish(env);
  env.note({"join", state_.id, std::nullopt, state_.forwarded_feed, 0});

  for (FeedId f : kFeeds) {
    FeedLink& link = state_.link[slot(f)];
    if (found[slot(f)]) {
      link.pending = PendingAttach{};
      link.pending->purpose = AttachPurpose::Join;
      send_request(env, f, found[slot(f)]->peer_id, cfg.index_latency);
    } else {
      env.note({"poll_scheduled", state_.id, std::nullopt, f, 0});
      env.schedule_retry(state_.id, RetryKind::Poll, f, 0, now + cfg.poll_interval);
    }
  }
}

void OverlayNode::send_request(NodeEnv& env, FeedId feed, NodeId target, Tick extra_delay) {
  PendingAttach& p = *state_.link[slot(feed)].pending;
  p.target = target;
  p.attempt = ++state_.next_attempt;

  Message m;
  m.type = MessageType::AttachRequest;
  m.feed = feed;
  m.attempt = p.attempt;
  m.recovery = p.purpose == AttachPurpose::Reattach;
  m.forwards = state_.forwarded_feed;
  m.value = p.redirects;
  env.send(state_.id, target, m, extra_delay);
  env.schedule_retry(state_.id, RetryKind::AttachTimeout, feed, p.attempt,
                     env.now() + extra_delay + env.protocol().attach_timeout);
}

void OverlayNode::query_and_request(NodeEnv& env, FeedId feed) {
  FeedLink& link = state_.link[slot(feed)];
  if (!link.pending) {
    link.pending = PendingAttach{};
    link.pending->purpose = link.recovery ? AttachPurpose::Reattach : AttachPurpose::Poll;
  }
  std::vector<NodeId> exclude = link.pending->tried;
  const FeedLink& sibling = state_.link[slot(other(feed))];
  if (sibling.parent) exclude.push_back(*sibling.parent);
  if (sibling.pending) exclude.push_back(sibling.pending->target);

  auto found = env.index().refer(feed, state_.id, env.now(), exclude);
  if (!found) {
    attach_exhausted(env, feed);
    return;
  }
  link.pending->redirects = 0;
  send_request(env, feed, found->peer_id, env.protocol().index_latency);
}

void OverlayNode::attach_exhausted(NodeEnv& env, FeedId feed) {
  state_.link[slot(feed)].pending.reset();
  env.note({"no_source", state_.id, std::nullopt, feed, 0});
  env.schedule_retry(state_.id, RetryKind::Poll, feed, 0, env.now() + env.protocol().poll_interval);
}

void OverlayNode::start_attach(NodeEnv& env, FeedId feed, AttachPurpose purpose,
                               std::optional<NodeId> avoid) {
  FeedLink& link = state_.link[slot(feed)];
  link.pending = PendingAttach{};
  link.pending->purpose = purpose;
  const auto& gp = link.grandparent;
  if (purpose == AttachPurpose::Reattach && gp && *gp != state_.id && gp != avoid) {
    send_request(env, feed, *gp, 0);
    return;
  }
  query_and_request(env, feed);
}

void OverlayNode::on_retry(NodeEnv& env, RetryKind kind, FeedId feed, std::uint64_t attempt) {
  if (!state_.alive()) return;
  FeedLink& link = state_.link[slot(feed)];
  switch (kind) {
    case RetryKind::JoinRetry:
      begin_join(env);
      return;
    case RetryKind::AttachTimeout:
      if (!link.pending || link.pending->attempt != attempt) return;
      env.note({"attach_timeout", state_.id, link.pending->target, feed, 0});
      link.pending->tried.push_back(link.pending->target);
      query_and_request(env, feed);
      return;
    case RetryKind::Poll: {
      if (link.parent || link.pending || state_.life != Lifecycle::Active) return;
      env.note({"poll", state_.id, std::nullopt, feed, 0});
      if (link.recovery) {
        RecoveryContext& rc = *link.recovery;
        const ProtocolConfig& cfg = env.protocol();
        // Keep the orphaned subtree fenced off while we are still unattached.
        if (rc.window_until <= env.now() + cfg.poll_interval + cfg.attach_timeout) {
          rc.window_until = env.now() + cfg.transition_duration;
          apply_subtree_marks(env, feed, rc.strategy, rc.window_until, rc.resume_after, false);
        }
        start_attach(env, feed, AttachPurpose::Reattach, link.previous_parent);
      } else {
        start_attach(env, feed, AttachPurpose::Poll);
      }
      return;
    }
  }
}

void OverlayNode::on_message(NodeEnv& env, NodeId from, const Message& msg) {
  if (!state_.alive()) return;
  FeedLink& link = state_.link[slot(msg.feed)];
  switch (msg.type) {
    case MessageType::Data:
      on_data_packet(env, from, msg.seq, msg.feed);
      return;
    case MessageType::AttachRequest:
      handle_attach_request(env, from, msg);
      return;
    case MessageType::AttachAccept:
      handle_accept(env, from, msg);
      return;
    case MessageType::AttachRedirect:
      handle_redirect(env, from, msg);
      return;
    case MessageType::AttachRefuse:
      handle_refuse(env, from, msg);
      return;
    case MessageType::Detach:
      if (release_child(env, msg.feed, from)) {
        env.note({"detach", state_.id, from, msg.feed, 0});
      }
      return;
    case MessageType::ParentInfo:
      if (link.parent == from) {
        link.grandparent = msg.peer;
        link.hops = msg.value + 1;
      }
      return;
    case MessageType::Republish:
      if (link.parent != from) return;
      if (state_.withdrawn) {
        publish(env);
        env.note({"republish", state_.id, from, msg.feed, 0});
      }
      cascade_republish(env, msg.feed);
      return;
    case MessageType::LeaveNotice:
      handle_leave_notice(env, from, msg);
      return;
    case MessageType::CcReport:
      for (ChildEntry& e : state_.children[slot(msg.feed)]) {
        if (e.id == from) {
          e.reported_cc = msg.value;
          e.last_seen = env.now();
          break;
        }
      }
      return;
  }
}

void OverlayNode::handle_attach_request(NodeEnv& env, NodeId from, const Message& msg) {
  const Tick now = env.now();
  const AttachReply reply =
      grandparent_redirect(state_, from, msg.forwards, msg.feed, msg.recovery, now,
                           env.protocol());

  Message r;
  r.feed = msg.feed;
  r.attempt = msg.attempt;
  switch (reply.decision) {
    case AttachDecision::Accept: {
      auto& list = state_.children[slot(msg.feed)];
      auto it = std::find_if(list.begin(), list.end(), [&](const ChildEntry& e) { return e.id == from; });
      const bool relay = msg.forwards == msg.feed;
      if (it == list.end()) {
        list.push_back(ChildEntry{from, 0, now, relay});
      } else {
        it->last_seen = now;
        it->relay = relay;
      }
      r.type = MessageType::AttachAccept;
      r.peer = state_.link[slot(msg.feed)].parent;
      r.value = state_.is_source ? 0 : state_.link[slot(msg.feed)].hops;
      env.note({"accept", state_.id, from, msg.feed, state_.out_degree(msg.feed)});
      sync_index(env);
      break;
    }
    case AttachDecision::Redirect:
      r.type = MessageType::AttachRedirect;
      r.peer = reply.redirect_to;
      env.note({"redirect", state_.id, from, msg.feed, reply.redirect_to->value});
      break;
    case AttachDecision::Refuse:
      r.type = MessageType::AttachRefuse;
      env.note({"refuse", state_.id, from, msg.feed, 0});
      break;
  }
  env.send(state_.id, from, r);
}

void OverlayNode::handle_accept(NodeEnv& env, NodeId from, const Message& msg) {
  FeedLink& link = state_.link[slot(msg.feed)];
  if (!link.pending || link.pending->attempt != msg.attempt || link.parent) {
    // We gave up on this offer; release the slot it reserved.
    Message d;
    d.type = MessageType::Detach;
    d.feed = msg.feed;
    env.send(state_.id, from, d);
    env.note({"stale_accept", state_.id, from, msg.feed, 0});
    return;
  }
  finish_attach(env, msg.feed, from, msg);
}

void OverlayNode::finish_attach(NodeEnv& env, FeedId feed, NodeId parent, const Message& accept) {
  FeedLink& link = state_.link[slot(feed)];
  const AttachPurpose purpose = link.pending->purpose;
  link.parent = parent;
  link.grandparent = accept.peer;
  link.hops = accept.value + 1;
  link.last_heartbeat = env.now();
  link.pending.reset();
  // Left set only if our new parent's subtree was cut off while the accept
  // was in flight; the first packet from after the break clears it.
  env.note({"attached", state_.id, parent, feed, static_cast<std::int64_t>(purpose)});

  if (link.previous_parent && *link.previous_parent != parent) {
    Message d;
    d.type = MessageType::Detach;
    d.feed = feed;
    env.send(state_.id, *link.previous_parent, d);
  }
  link.previous_parent.reset();

  if (link.recovery) {
    link.awaiting_resume = true;
    if (link.recovery->republish) {
      if (state_.withdrawn) publish(env);
      cascade_republish(env, feed);
    }
    link.recovery.reset();
  }
  push_parent_info(env, feed);
  if (state_.registered) publish(env);
}

void OverlayNode::handle_redirect(NodeEnv& env, NodeId from, const Message& msg) {
  FeedLink& link = state_.link[slot(msg.feed)];
  if (!link.pending || link.pending->attempt != msg.attempt) return;
  PendingAttach& p = *link.pending;
  p.tried.push_back(from);
  const auto& sibling_parent = state_.link[slot(other(msg.feed))].parent;
  const bool usable = msg.peer && *msg.peer != state_.id && msg.peer != sibling_parent &&
                      std::find(p.tried.begin(), p.tried.end(), *msg.peer) == p.tried.end();
  if (usable && p.redirects < env.protocol().max_redirects) {
    ++p.redirects;
    send_request(env, msg.feed, *msg.peer, 0);
    return;
  }
  query_and_request(env, msg.feed);
}

void OverlayNode::handle_refuse(NodeEnv& env, NodeId from, const Message& msg) {
  FeedLink& link = state_.link[slot(msg.feed)];
  if (!link.pending || link.pending->attempt != msg.attempt) return;
  link.pending->tried.push_back(from);
  query_and_request(env, msg.feed);
}

void OverlayNode::handle_leave_notice(NodeEnv& env, NodeId from, const Message& msg) {
  FeedLink& link = state_.link[slot(msg.feed)];
  if (link.parent != from) return;
  env.note({"leave_notice", state_.id, from, msg.feed, 0});
  const ProtocolConfig& cfg = env.protocol();
  link.previous_parent = from;
  link.parent.reset();
  link.grandparent = msg.peer;
  link.interrupted = false;
  sync_index(env);
  RecoveryContext rc;
  rc.resume_after = std::max(link.resume_after, link.last_seq);
  rc.window_until = std::max(link.interrupted_until, env.now() + cfg.transition_duration);
  rc.strategy = Strategy::Unpublish;
  rc.republish = true;
  link.recovery = rc;
  start_attach(env, msg.feed, AttachPurpose::Reattach, from);
}

void OverlayNode::push_parent_info(NodeEnv& env, FeedId feed) {
  if (state_.forwarded_feed != feed) return;
  Message m;
  m.type = MessageType::ParentInfo;
  m.feed = feed;
  m.peer = state_.link[slot(feed)].parent;
  m.value = state_.link[slot(feed)].hops;
  for (const ChildEntry& c : state_.children[slot(feed)]) env.send(state_.id, c.id, m);
}

void OverlayNode::cascade_republish(NodeEnv& env, FeedId feed) {
  if (state_.forwarded_feed != feed) return;
  Message m;
  m.type = MessageType::Republish;
  m.feed = feed;
  for (const ChildEntry& c : state_.children[slot(feed)]) env.send(state_.id, c.id, m);
}

void OverlayNode::on_data_packet(NodeEnv& env, NodeId from, PacketSeq seq, FeedId via) {
  if (!state_.alive() || state_.is_source) return;
  FeedLink& link = state_.link[slot(via)];
  if (!link.parent) {
    ++state_.anomalies;
    return;
  }
  link.last_heartbeat = env.now();
  if (seq > link.last_seq) link.last_seq = seq;
  if (link.awaiting_resume) {
    link.awaiting_resume = false;
    env.note({"feed_resumed", state_.id, from, via, seq});
  }
  if (link.interrupted && seq > link.resume_after) {
    link.interrupted = false;
    env.note({"refed", state_.id, from, via, seq});
  }

  state_.buffer.insert(seq, via);

  if (state_.forwarded_feed == via) {
    Message m;
    m.type = MessageType::Data;
    m.feed = via;
    m.seq = seq;
    for (const ChildEntry& c : state_.children[slot(via)]) env.send(state_.id, c.id, m);
  }
}

PlayoutResult OverlayNode::playout_tick() {
  if (!state_.alive() || state_.is_source || state_.life != Lifecycle::Active) return {};
  return state_.buffer.tick();
}

void OverlayNode::emit(NodeEnv& env, PacketSeq seq) {
  if (!state_.is_source) return;
  Message m;
  m.type = MessageType::Data;
  m.seq = seq;
  for (FeedId f : kFeeds) {
    m.feed = f;
    for (const ChildEntry& c : state_.children[slot(f)]) env.send(state_.id, c.id, m);
  }
}

void OverlayNode::check_heartbeats(NodeEnv& env) {
  if (!state_.alive() || state_.is_source) return;
  const Tick now = env.now();
  for (FeedId f : kFeeds) {
    FeedLink& link = state_.link[slot(f)];
    if (!link.parent) continue;
    if (link.interrupted) {
      if (now < link.interrupted_until) continue;
      link.interrupted = false;
      env.note({"refed", state_.id, link.parent, f, 0});
    }
    if (now - link.last_heartbeat >= env.protocol().failure_timeout) handle_parent_loss(env, f);
  }
}

void OverlayNode::handle_parent_loss(NodeEnv& env, FeedId feed) {
  FeedLink& link = state_.link[slot(feed)];
  if (!link.parent) return;
  const ProtocolConfig& cfg = env.protocol();
  const NodeId failed = *link.parent;
  env.note({"parent_lost", state_.id, failed, feed, link.last_seq});

  link.previous_parent = failed;
  link.parent.reset();
  link.interrupted = false;
  sync_index(env);

  RecoveryContext rc;
  rc.resume_after = link.last_seq;
  rc.window_until = env.now() + cfg.transition_duration;
  rc.strategy = cfg.strategy;
  rc.republish = cfg.strategy == Strategy::Unpublish;
  link.recovery = rc;

  apply_subtree_marks(env, feed, rc.strategy, rc.window_until, rc.resume_after, false);
  reattach_feed(env, feed);
}

void OverlayNode::reattach_feed(NodeEnv& env, FeedId feed) {
  FeedLink& link = state_.link[slot(feed)];
  if (link.parent || link.pending) return;
  start_attach(env, feed, AttachPurpose::Reattach, link.previous_parent);
}

void OverlayNode::apply_subtree_marks(NodeEnv& env, FeedId feed, Strategy strategy, Tick until,
                                      PacketSeq resume_after, bool include_self_flag) {
  IndexTable& index = env.index();
  std::vector<OverlayNode*> stack{this};
  while (!stack.empty()) {
    OverlayNode* member = stack.back();
    stack.pop_back();
    NodeState& s = member->state_;
    if (member != this || include_self_flag) {
      FeedLink& l = s.link[slot(feed)];
      l.interrupted = true;
      l.interrupted_until = std::max(l.interrupted_until, until);
      l.resume_after = std::max(l.resume_after, resume_after);
    }
    const bool advertises_feed = s.forwarded_feed == feed && s.registered;
    switch (strategy) {
      case Strategy::Hold:
        s.hold_until = std::max(s.hold_until, until);
        env.note({"hold", s.id, state_.id, feed, until});
        break;
      case Strategy::Ine:
        if (s.forwarded_feed == feed) {
          s.ineligible_until = std::max(s.ineligible_until, until);
          if (advertises_feed) {
            const NodeId ids[] = {s.id};
            index.mark_ineligible(ids, until);
          }
          env.note({"ine", s.id, state_.id, feed, until});
        }
        break;
      case Strategy::Unpublish:
        if (advertises_feed) {
          index.unpublish(s.id);
          s.registered = false;
          s.withdrawn = true;
          env.note({"unpublish", s.id, state_.id, feed, until});
        }
        break;
    }
    if (s.forwarded_feed != feed) continue;
    for (const ChildEntry& c : s.children[slot(feed)]) {
      OverlayNode* child = env.live_peer(c.id);
      if (!child) continue;
      // A child whose accept is still in flight joins the subtree too;
      // otherwise it would attach unmarked below a cut-off node.
      const FeedLink& cl = child->state_.link[slot(feed)];
      const bool joining = !cl.parent && cl.pending && cl.pending->target == s.id;
      if (cl.parent == s.id || joining) stack.push_back(child);
    }
  }
}

bool OverlayNode::leave_gracefully(NodeEnv& env) {
  if (state_.is_source || !state_.alive()) return false;
  const ProtocolConfig& cfg = env.protocol();
  env.note({"leave", state_.id, std::nullopt, state_.forwarded_feed, 0});

  if (state_.forwarded_feed) {
    const FeedId f = *state_.forwarded_feed;
    const FeedLink& own = state_.link[slot(f)];
    const Tick until = env.now() + cfg.transition_duration;
    Message notice;
    notice.type = MessageType::LeaveNotice;
    notice.feed = f;
    notice.peer = own.parent;
    for (const ChildEntry& c : state_.children[slot(f)]) {
      OverlayNode* child = env.live_peer(c.id);
      if (!child || child->state_.link[slot(f)].parent != state_.id) continue;
      child->apply_subtree_marks(env, f, Strategy::Unpublish, until, own.last_seq, true);
      env.send(state_.id, c.id, notice);
    }
  }

  for (FeedId f : kFeeds) {
    const FeedLink& link = state_.link[slot(f)];
    if (!link.parent) continue;
    Message d;
    d.type = MessageType::Detach;
    d.feed = f;
    env.send(state_.id, *link.parent, d);
  }
  if (state_.registered) env.index().unpublish(state_.id);
  state_.registered = false;
  state_.life = Lifecycle::Departed;
  for (auto& list : state_.children) list.clear();
  for (auto& link : state_.link) link.pending.reset();
  return true;
}

void OverlayNode::fail() {
  if (state_.is_source) return;
  state_.life = Lifecycle::Failed;
}

void OverlayNode::send_reports(NodeEnv& env) {
  if (!state_.alive() || state_.is_source) return;
  for (FeedId f : kFeeds) {
    const FeedLink& link = state_.link[slot(f)];
    if (!link.parent) continue;
    Message m;
    m.type = MessageType::CcReport;
    m.feed = f;
    m.value = state_.forwarded_feed == f ? state_.cached_cc(f) : 0;
    env.send(state_.id, *link.parent, m);
  }
}

void OverlayNode::reap_children(NodeEnv& env) {
  if (!state_.alive()) return;
  const Tick now = env.now();
  const Tick timeout = env.protocol().child_timeout;
  bool changed = false;
  for (FeedId f : kFeeds) {
    auto& list = state_.children[slot(f)];
    for (auto it = list.begin(); it != list.end();) {
      if (now - it->last_seen > timeout) {
        env.note({"child_reaped", state_.id, it->id, f, 0});
        it = list.erase(it);
        changed = true;
      } else {
        ++it;
      }
    }
  }
  if (changed) sync_index(env);
}

void OverlayNode::adopt_child(NodeEnv& env, FeedId feed, ChildEntry entry) {
  if (!state_.has_child(feed, entry.id)) state_.children[slot(feed)].push_back(entry);
  sync_index(env);
}

std::optional<ChildEntry> OverlayNode::release_child(NodeEnv& env, FeedId feed, NodeId child) {
  auto& list = state_.children[slot(feed)];
  auto it = std::find_if(list.begin(), list.end(), [&](const ChildEntry& e) { return e.id == child; });
  if (it == list.end()) return std::nullopt;
  ChildEntry entry = *it;
  list.erase(it);
  sync_index(env);
  return entry;
}

void OverlayNode::set_parent(FeedId feed, NodeId parent, std::optional<NodeId> grandparent,
                             std::uint32_t hops) {
  FeedLink& link = state_.link[slot(feed)];
  link.parent = parent;
  link.grandparent = grandparent;
  link.hops = hops;
}

}  // namespace dualfeed
