#include "dualfeed/metrics.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>

namespace dualfeed {

namespace {

// Depth of every node in one feed, or nullopt where the chain is broken or loops.
class DepthMemo {
 public:
  DepthMemo(const Topology& topo, FeedId feed) : topo_(topo), feed_(feed) {}

  std::optional<std::uint32_t> depth(NodeId node) {
    std::vector<NodeId> path;
    std::set<NodeId> on_path;
    std::optional<std::uint32_t> base;
    NodeId cur = node;
    while (true) {
      if (auto it = memo_.find(cur); it != memo_.end()) {
        base = it->second;
        break;
      }
      const NodeSnapshot* snap = topo_.find(cur);
      if (!snap) break;
      if (snap->is_source) {
        base = 0;
        memo_[cur] = 0;
        break;
      }
      if (!on_path.insert(cur).second) break;
      path.push_back(cur);
      const auto p = snap->parent[slot(feed_)];
      if (!p) break;
      cur = *p;
    }
    // Unwind: nodes nearer the end of `path` are nearer the source.
    for (auto it = path.rbegin(); it != path.rend(); ++it) {
      if (base) base = *base + 1;
      memo_[*it] = base;
    }
    return memo_.count(node) ? memo_[node] : base;
  }

 private:
  const Topology& topo_;
  FeedId feed_;
  std::unordered_map<NodeId, std::optional<std::uint32_t>> memo_;
};

}  // namespace

HopMetrics hop_metrics(const Topology& topo) {
  HopMetrics out;
  DepthMemo f1(topo, FeedId::F1);
  DepthMemo f2(topo, FeedId::F2);
  for (const auto& [id, snap] : topo.nodes) {
    if (snap.is_source) continue;
    HopRecord rec;
    rec.node = id;
    rec.hop_f1 = f1.depth(id);
    rec.hop_f2 = f2.depth(id);
    if (rec.hop_f1 && rec.hop_f2) {
      rec.hop_diff = *rec.hop_f1 > *rec.hop_f2 ? *rec.hop_f1 - *rec.hop_f2 : *rec.hop_f2 - *rec.hop_f1;
      ++out.diff_histogram[*rec.hop_diff];
    }
    out.nodes.push_back(rec);
  }
  return out;
}

RecoveryRecord recovery_metrics(const std::vector<TraceRecord>& trace, const TraceRecord& failure) {
  RecoveryRecord rec;
  rec.failure_node = failure.node;
  rec.fail_time = failure.at;
  rec.affected_count = static_cast<std::uint32_t>(failure.value);
  if (rec.affected_count == 0) {
    rec.detect_time = rec.resume_time = failure.at;
    rec.recovery_time = 0;
    return rec;
  }

  // The orphan list is written by the failure event itself, so it shares its seq_no.
  auto after_failure = [&](const TraceRecord& r) {
    if (r.at != failure.at) return r.at > failure.at;
    return r.seq_no > failure.seq_no || (r.seq_no == failure.seq_no && r.action == "orphaned");
  };

  // Each orphan is resolved by its first packet after declaring the loss, or
  // dropped if it leaves the overlay itself first.
  struct Orphan {
    FeedId feed;
    bool detected = false;
    std::optional<Tick> resumed;
    bool gone = false;
  };
  std::map<NodeId, Orphan> orphans;
  for (const TraceRecord& r : trace) {
    if (!after_failure(r)) continue;
    if (r.peer == failure.node && r.feed &&
        (r.action == "orphaned" || r.action == "parent_lost")) {
      Orphan& o = orphans.try_emplace(r.node, Orphan{*r.feed, false, std::nullopt, false}).first->second;
      if (r.action == "parent_lost") {
        if (!rec.detect_time) rec.detect_time = r.at;
        o.detected = true;
      }
      continue;
    }
    auto it = orphans.find(r.node);
    if (it == orphans.end() || it->second.resumed || it->second.gone) continue;
    if (r.action == "feed_resumed" && r.feed == it->second.feed && it->second.detected) {
      it->second.resumed = r.at;
    } else if (r.action == "fail" || r.action == "leave") {
      it->second.gone = true;
    }
  }

  std::optional<Tick> resume;
  for (const auto& [id, o] : orphans) {
    if (o.gone) continue;
    if (!o.resumed) return rec;
    resume = std::max(resume.value_or(*o.resumed), *o.resumed);
  }
  if (!resume) {
    rec.recovery_time = 0;
    return rec;
  }
  rec.resume_time = resume;
  rec.recovery_time = *resume - failure.at;
  return rec;
}

}  // namespace dualfeed
