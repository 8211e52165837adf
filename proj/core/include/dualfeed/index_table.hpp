#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "dualfeed/types.hpp"

namespace dualfeed {

/// One advertisement row at the indexing service.
struct PeerRecord {
  NodeId peer_id;
  std::optional<FeedId> willing_feed;
  std::uint32_t out_degree = 0;
  std::optional<NodeId> parent_f1;
  std::optional<NodeId> parent_f2;
  Tick registered_at = 0;
  std::optional<Tick> ineligible_until;
  Tick last_refresh = 0;
  /// Advertised distance from the source; only consulted by the hop-count
  /// parent policy.
  std::uint32_t hops = 0;

  bool operator==(const PeerRecord&) const = default;
};

struct IndexConfig {
  std::uint32_t max_out_degree = 3;
  std::uint32_t source_capacity = 1;
  Tick refresh_ttl = 10;
  bool hop_count_policy = false;
};

/// Directory of forwarders for the two feeds of one stream.
///
/// The source is implicit: it is always a forwarder of both feeds, limited by
/// a per-feed child capacity. Every other peer advertises at most one feed.
/// Selection is least current out-degree, then earliest registration, then
/// lowest id. Records that were not refreshed within `refresh_ttl`, carry an
/// active ineligibility tag, are at `max_out_degree`, or have no parent on the
/// feed they advertise are never returned.
class IndexTable {
 public:
  IndexTable(NodeId source, IndexConfig config);

  /// Idempotent upsert. Keeps the first registration time and any existing
  /// ineligibility tag; refreshes `last_refresh` to `now`.
  void publish(const PeerRecord& record, Tick now);

  /// Removes the record; absent peers are a no-op.
  void unpublish(NodeId peer);

  /// ineligible_until := max(existing, until) for each present peer.
  void mark_ineligible(std::span<const NodeId> peers, Tick until);

  /// Best eligible forwarder for `feed`, or nullopt when none is available
  /// (callers back off and retry).
  std::optional<PeerRecord> query_best_source(FeedId feed, NodeId requester, Tick now,
                                              std::span<const NodeId> exclude = {}) const;

  /// query_best_source, then counts the answer as one provisional child of
  /// the returned peer until that peer next publishes. Keeps a burst of
  /// simultaneous joiners from all being sent to the same peer.
  std::optional<PeerRecord> refer(FeedId feed, NodeId requester, Tick now,
                                  std::span<const NodeId> exclude = {});
  std::uint32_t referrals(NodeId peer) const;

  /// Feed with fewer advertised forwarders (source counts for both); ties go to F1.
  FeedId assign_forward_feed() const;

  void set_source_out_degree(FeedId feed, std::uint32_t out_degree);
  std::uint32_t source_out_degree(FeedId feed) const { return source_out_[slot(feed)]; }

  /// Drops records whose soft state expired. Returns the removed peers.
  std::vector<NodeId> expire_stale(Tick now);

  /// Whether `record` passes every selection predicate for `feed` at `now`.
  bool eligible(const PeerRecord& record, FeedId feed, NodeId requester, Tick now) const;

  const PeerRecord* find(NodeId peer) const;
  std::size_t size() const { return records_.size(); }
  /// Advertised forwarders of `feed`, including the source.
  std::size_t forwarder_count(FeedId feed) const { return forwarders_[slot(feed)] + 1; }
  /// Forwarders of `feed` currently eligible for a new child (source included).
  std::size_t active_forwarders(FeedId feed, Tick now) const;

  const std::map<NodeId, PeerRecord>& records() const { return records_; }
  NodeId source() const { return source_; }
  const IndexConfig& config() const { return config_; }

  bool operator==(const IndexTable& other) const {
    return records_ == other.records_ && source_out_ == other.source_out_;
  }

 private:
  struct Key {
    std::uint32_t hops;
    std::uint32_t out_degree;
    Tick registered_at;
    NodeId peer;
    auto operator<=>(const Key&) const = default;
  };

  Key key_of(const PeerRecord& record) const;
  std::uint32_t load(const PeerRecord& record) const;
  void index_insert(const PeerRecord& record);
  void index_erase(const PeerRecord& record);
  PeerRecord source_record(FeedId feed) const;

  NodeId source_;
  IndexConfig config_;
  std::map<NodeId, PeerRecord> records_;
  // Candidates ordered by selection preference, one set per feed.
  std::array<std::set<Key>, 2> ranked_;
  std::array<std::size_t, 2> forwarders_{0, 0};
  std::array<std::uint32_t, 2> source_out_{0, 0};
  std::map<NodeId, std::uint32_t> referrals_;
  std::array<std::uint32_t, 2> source_referrals_{0, 0};
};

}  // namespace dualfeed
