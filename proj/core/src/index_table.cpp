#include "dualfeed/index_table.hpp"

#include <algorithm>

namespace dualfeed {

IndexTable::IndexTable(NodeId source, IndexConfig config) : source_(source), config_(config) {}

IndexTable::Key IndexTable::key_of(const PeerRecord& record) const {
  return Key{config_.hop_count_policy ? record.hops : 0u, load(record), record.registered_at,
             record.peer_id};
}

std::uint32_t IndexTable::load(const PeerRecord& record) const {
  if (record.peer_id == source_) {
    return record.out_degree;  // source_record() already folds referrals in
  }
  return record.out_degree + referrals(record.peer_id);
}

std::uint32_t IndexTable::referrals(NodeId peer) const {
  if (peer == source_) return source_referrals_[0] + source_referrals_[1];
  auto it = referrals_.find(peer);
  return it == referrals_.end() ? 0 : it->second;
}

namespace {

bool receiving(const PeerRecord& record, FeedId feed) {
  return (feed == FeedId::F1 ? record.parent_f1 : record.parent_f2).has_value();
}

}  // namespace

void IndexTable::index_insert(const PeerRecord& record) {
  if (!record.willing_feed) return;
  const FeedId feed = *record.willing_feed;
  if (receiving(record, feed)) ranked_[slot(feed)].insert(key_of(record));
  ++forwarders_[slot(feed)];
}

void IndexTable::index_erase(const PeerRecord& record) {
  if (!record.willing_feed) return;
  ranked_[slot(*record.willing_feed)].erase(key_of(record));
  --forwarders_[slot(*record.willing_feed)];
}

void IndexTable::publish(const PeerRecord& record, Tick now) {
  if (record.peer_id == source_) return;
  PeerRecord next = record;
  next.last_refresh = now;
  if (auto it = records_.find(record.peer_id); it != records_.end()) {
    const PeerRecord& prev = it->second;
    next.registered_at = prev.registered_at;
    if (prev.ineligible_until &&
        (!next.ineligible_until || *next.ineligible_until < *prev.ineligible_until)) {
      next.ineligible_until = prev.ineligible_until;
    }
    index_erase(prev);
    referrals_.erase(record.peer_id);
    it->second = next;
  } else {
    next.registered_at = now;
    records_.emplace(next.peer_id, next);
  }
  index_insert(next);
}

void IndexTable::unpublish(NodeId peer) {
  auto it = records_.find(peer);
  if (it == records_.end()) return;
  index_erase(it->second);
  referrals_.erase(peer);
  records_.erase(it);
}

void IndexTable::mark_ineligible(std::span<const NodeId> peers, Tick until) {
  for (NodeId peer : peers) {
    auto it = records_.find(peer);
    if (it == records_.end()) continue;
    auto& tag = it->second.ineligible_until;
    tag = tag ? std::max(*tag, until) : until;
  }
}

bool IndexTable::eligible(const PeerRecord& record, FeedId feed, NodeId requester,
                          Tick now) const {
  if (record.peer_id == requester) return false;
  if (record.peer_id == source_) {
    return source_out_[slot(feed)] + source_referrals_[slot(feed)] < config_.source_capacity;
  }
  if (record.willing_feed != feed || !receiving(record, feed)) return false;
  if (load(record) >= config_.max_out_degree) return false;
  if (record.ineligible_until && now < *record.ineligible_until) return false;
  if (now - record.last_refresh > config_.refresh_ttl) return false;
  return true;
}

PeerRecord IndexTable::source_record(FeedId feed) const {
  PeerRecord rec;
  rec.peer_id = source_;
  rec.willing_feed = feed;
  rec.out_degree = source_out_[slot(feed)] + source_referrals_[slot(feed)];
  rec.registered_at = kNever;
  return rec;
}

std::optional<PeerRecord> IndexTable::query_best_source(FeedId feed, NodeId requester, Tick now,
                                                        std::span<const NodeId> exclude) const {
  auto excluded = [&](NodeId id) {
    return std::find(exclude.begin(), exclude.end(), id) != exclude.end();
  };

  std::optional<PeerRecord> best;
  const PeerRecord src = source_record(feed);
  if (!excluded(source_) && eligible(src, feed, requester, now)) best = src;

  // The ranked set is ordered by the selection key, so the first eligible
  // entry wins among the advertised peers.
  for (const Key& key : ranked_[slot(feed)]) {
    if (!config_.hop_count_policy && key.out_degree >= config_.max_out_degree) break;
    const PeerRecord& rec = records_.at(key.peer);
    if (excluded(rec.peer_id) || !eligible(rec, feed, requester, now)) continue;
    if (best) {
      // Compare against the source using the same ordering.
      const Key src_key = key_of(*best);
      if (src_key < key) return best;
    }
    return rec;
  }
  return best;
}

std::optional<PeerRecord> IndexTable::refer(FeedId feed, NodeId requester, Tick now,
                                            std::span<const NodeId> exclude) {
  auto found = query_best_source(feed, requester, now, exclude);
  if (!found) return found;
  if (found->peer_id == source_) {
    ++source_referrals_[slot(feed)];
    return found;
  }
  const PeerRecord& rec = records_.at(found->peer_id);
  index_erase(rec);
  ++referrals_[rec.peer_id];
  index_insert(rec);
  return found;
}

FeedId IndexTable::assign_forward_feed() const {
  return forwarders_[slot(FeedId::F1)] <= forwarders_[slot(FeedId::F2)] ? FeedId::F1 : FeedId::F2;
}

void IndexTable::set_source_out_degree(FeedId feed, std::uint32_t out_degree) {
  source_out_[slot(feed)] = out_degree;
  source_referrals_[slot(feed)] = 0;
}

std::vector<NodeId> IndexTable::expire_stale(Tick now) {
  std::vector<NodeId> expired;
  for (auto it = records_.begin(); it != records_.end();) {
    if (now - it->second.last_refresh > config_.refresh_ttl) {
      expired.push_back(it->first);
      index_erase(it->second);
      referrals_.erase(it->first);
      it = records_.erase(it);
    } else {
      ++it;
    }
  }
  return expired;
}

const PeerRecord* IndexTable::find(NodeId peer) const {
  auto it = records_.find(peer);
  return it == records_.end() ? nullptr : &it->second;
}

std::size_t IndexTable::active_forwarders(FeedId feed, Tick now) const {
  std::size_t n = eligible(source_record(feed), feed, NodeId{~0u}, now) ? 1 : 0;
  for (const auto& [id, rec] : records_) {
    if (eligible(rec, feed, NodeId{~0u}, now)) ++n;
  }
  return n;
}

}  // namespace dualfeed
