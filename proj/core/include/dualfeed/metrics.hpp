#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string_view>
#include <vector>

#include "dualfeed/topology.hpp"
#include "dualfeed/types.hpp"

namespace dualfeed {

/// One control-plane trace line. `kind` is the engine event being processed;
/// `action` says what happened. String views point at static storage.
struct TraceRecord {
  Tick at = 0;
  std::uint64_t seq_no = 0;
  std::string_view kind;
  std::string_view action;
  NodeId node;
  std::optional<NodeId> peer;
  std::optional<FeedId> feed;
  std::int64_t value = 0;

  bool operator==(const TraceRecord&) const = default;
};

struct HopRecord {
  NodeId node;
  std::optional<std::uint32_t> hop_f1;
  std::optional<std::uint32_t> hop_f2;
  std::optional<std::uint32_t> hop_diff;  // absent unless both sides reach the source
};

struct HopMetrics {
  std::vector<HopRecord> nodes;  // non-source nodes, ascending id
  std::map<std::uint32_t, std::uint64_t> diff_histogram;
};

/// Hop counts along both parent chains, memoised; broken or cyclic chains
/// leave that side missing and keep the node out of the histogram.
HopMetrics hop_metrics(const Topology& topo);

struct RecoveryRecord {
  NodeId failure_node;
  Tick fail_time = 0;
  std::optional<Tick> detect_time;
  std::optional<Tick> resume_time;
  std::optional<Tick> recovery_time;  // absent = unbounded
  std::uint32_t affected_count = 0;
  /// Unresolved, but the run ended inside the failure's recovery window.
  bool censored = false;

  bool unbounded() const { return !recovery_time.has_value(); }
};

/// Orphans are the failed node's direct children (the "orphaned" records
/// that follow the failure). Detection is the first orphan declaring the
/// failed node lost; resume is the latest first-packet time among orphans
/// once reattached. Orphans that leave or fail first are dropped; if none is
/// left, recovery_time is 0 and detect/resume stay empty.
RecoveryRecord recovery_metrics(const std::vector<TraceRecord>& trace, const TraceRecord& failure);

struct NodeMetrics {
  NodeId node;
  std::optional<std::uint32_t> hop_f1;
  std::optional<std::uint32_t> hop_f2;
  std::optional<std::uint32_t> hop_diff;
  std::uint64_t max_occupancy = 0;
  std::uint64_t underruns = 0;
};

struct MetricsRecord {
  std::vector<NodeMetrics> nodes;
  std::vector<RecoveryRecord> recoveries;
  std::map<std::uint32_t, std::uint64_t> out_degree_histogram;
  std::map<std::uint32_t, std::uint64_t> hop_diff_histogram;
};

}  // namespace dualfeed
