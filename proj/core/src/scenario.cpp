#include "dualfeed/scenario.hpp"

#include <algorithm>

namespace dualfeed {

std::string_view to_string(ArrivalProcess p) {
  return p == ArrivalProcess::Fixed ? "fixed" : "poisson";
}

std::string_view to_string(LinkMode m) {
  switch (m) {
    case LinkMode::Uniform:
      return "uniform";
    case LinkMode::PerPair:
      return "per-pair";
    case LinkMode::SeededRandom:
      return "seeded-random";
  }
  return "?";
}

Tick ScenarioConfig::max_link_delay() const {
  Tick worst = link.base_delay;
  if (link.mode == LinkMode::SeededRandom) worst += link.jitter;
  if (link.mode == LinkMode::PerPair) {
    for (const LinkPair& p : link.pairs) worst = std::max(worst, p.delay);
  }
  return worst;
}

Tick ScenarioConfig::effective_attach_timeout() const {
  if (attach_timeout > 0) return attach_timeout;
  return 2 * max_link_delay() + 1 + index_latency;
}

ProtocolConfig ScenarioConfig::protocol() const {
  ProtocolConfig p;
  p.max_out_degree = max_out_degree;
  p.source_capacity = source_per_feed_capacity;
  p.strategy = strategy;
  p.transition_duration = transition_duration;
  p.failure_timeout = failure_timeout;
  p.playout_lag = playout_lag;
  p.poll_interval = poll_interval;
  p.attach_timeout = effective_attach_timeout();
  p.max_redirects = max_redirects;
  p.child_timeout = child_timeout;
  p.index_latency = index_latency;
  return p;
}

IndexConfig ScenarioConfig::index() const {
  IndexConfig c;
  c.max_out_degree = max_out_degree;
  c.source_capacity = source_per_feed_capacity;
  c.refresh_ttl = refresh_ttl;
  c.hop_count_policy = hop_count_parent_policy;
  return c;
}

std::vector<ConfigIssue> validate(const ScenarioConfig& c) {
  std::vector<ConfigIssue> issues;
  auto require = [&](bool ok, const char* key, const std::string& msg) {
    if (!ok) issues.push_back({key, msg});
  };
  auto positive = [&](Tick v, const char* key) { require(v > 0, key, "must be > 0"); };
  auto non_negative = [&](Tick v, const char* key) { require(v >= 0, key, "must be >= 0"); };
  auto fraction = [&](double v, const char* key) {
    require(v >= 0.0 && v <= 1.0, key, "must be within [0, 1]");
  };

  positive(c.horizon, "horizon");
  non_negative(c.join_start, "join_start");
  positive(c.join_interval, "join_interval");
  require(c.arrival_rate > 0.0, "arrival_rate", "must be > 0");
  require(c.mean_lifetime >= 0.0, "mean_lifetime", "must be >= 0");
  fraction(c.departure_failure_fraction, "departure_failure_fraction");
  fraction(c.random_failure_fraction, "random_failure_fraction");
  non_negative(c.random_failure_start, "random_failure_start");
  non_negative(c.random_failure_end, "random_failure_end");
  require(c.random_failure_end == 0 || c.random_failure_end >= c.random_failure_start,
          "random_failure_end", "must be >= random_failure_start");

  require(c.max_out_degree >= 1, "max_out_degree", "must be >= 1");
  require(c.source_per_feed_capacity >= 1, "source_per_feed_capacity", "must be >= 1");
  positive(c.transition_duration, "transition_duration");
  positive(c.failure_timeout, "failure_timeout");
  require(c.playout_lag >= 1, "playout_lag", "must be >= 1");
  positive(c.poll_interval, "poll_interval");
  positive(c.refresh_ttl, "refresh_ttl");
  non_negative(c.optimizer_period, "optimizer_period");
  positive(c.cc_report_period, "cc_report_period");
  positive(c.child_timeout, "child_timeout");
  require(c.child_timeout > c.cc_report_period + 2 * c.max_link_delay(), "child_timeout",
          "must exceed cc_report_period plus a round trip");
  non_negative(c.attach_timeout, "attach_timeout");
  non_negative(c.index_latency, "index_latency");

  non_negative(c.link.base_delay, "link.base_delay");
  non_negative(c.link.jitter, "link.jitter");
  for (const LinkPair& p : c.link.pairs) {
    non_negative(p.delay, "link.pairs");
    require(p.a != p.b, "link.pairs", "a pair needs two distinct nodes");
  }

  auto check_schedule = [&](const std::vector<ScheduledEvent>& list, const char* key) {
    for (const ScheduledEvent& e : list) {
      require(e.node != kSourceId, key, "the source cannot be scheduled to fail or leave");
      require(e.node.value <= c.node_count, key,
              "node " + std::to_string(e.node.value) + " exceeds node_count");
      require(e.at >= 0 && e.at <= c.horizon, key, "time must be within [0, horizon]");
    }
  };
  check_schedule(c.failures, "failures");
  check_schedule(c.leaves, "leaves");
  return issues;
}

ScenarioError::ScenarioError(std::string key, int line, const std::string& message)
    : std::runtime_error(line > 0 ? key + " (line " + std::to_string(line) + "): " + message
                                  : key + ": " + message),
      key_(std::move(key)),
      line_(line) {}

}  // namespace dualfeed
