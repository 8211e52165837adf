#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "dualfeed/index_table.hpp"
#include "dualfeed/overlay_node.hpp"
#include "dualfeed/types.hpp"

namespace dualfeed {

enum class ArrivalProcess : std::uint8_t { Fixed, Poisson };
enum class LinkMode : std::uint8_t { Uniform, PerPair, SeededRandom };

std::string_view to_string(ArrivalProcess p);
std::string_view to_string(LinkMode m);

struct LinkPair {
  NodeId a;
  NodeId b;
  Tick delay = 1;
  bool operator==(const LinkPair&) const = default;
};

struct LinkConfig {
  LinkMode mode = LinkMode::Uniform;
  Tick base_delay = 1;
  Tick jitter = 0;
  std::vector<LinkPair> pairs;  // per-pair overrides; symmetric
  bool operator==(const LinkConfig&) const = default;
};

struct ScheduledEvent {
  NodeId node;
  Tick at = 0;
  bool operator==(const ScheduledEvent&) const = default;
};

/// Declarative description of one simulation run. Joining nodes get ids
/// 1..node_count in arrival order; the source is node 0.
struct ScenarioConfig {
  std::uint32_t node_count = 0;
  std::uint64_t seed = 1;
  Tick horizon = 1000;

  ArrivalProcess arrival_process = ArrivalProcess::Fixed;
  Tick join_start = 10;
  Tick join_interval = 10;  // fixed arrivals
  double arrival_rate = 1.0;  // poisson arrivals per tick

  // Churn: exponential lifetimes (0 = nodes never depart on their own).
  double mean_lifetime = 0.0;
  double departure_failure_fraction = 0.5;
  std::uint32_t max_churn_events = 0;  // 0 = no cap
  // Extra abrupt failures drawn uniformly over [start, end].
  double random_failure_fraction = 0.0;
  Tick random_failure_start = 0;
  Tick random_failure_end = 0;  // 0 = horizon

  Strategy strategy = Strategy::Ine;
  std::uint32_t max_out_degree = 3;
  std::uint32_t source_per_feed_capacity = 1;
  Tick transition_duration = 30;
  Tick failure_timeout = 3;
  std::uint32_t playout_lag = 1;
  Tick poll_interval = 5;
  Tick refresh_ttl = 10;
  Tick optimizer_period = 50;  // 0 disables
  Tick cc_report_period = 10;
  Tick child_timeout = 30;
  std::uint32_t max_redirects = 2;
  Tick attach_timeout = 0;  // 0 = derived from the link model
  Tick index_latency = 0;

  LinkConfig link;
  std::vector<ScheduledEvent> failures;
  std::vector<ScheduledEvent> leaves;
  bool hop_count_parent_policy = false;

  bool operator==(const ScenarioConfig&) const = default;

  Tick max_link_delay() const;
  Tick effective_attach_timeout() const;
  ProtocolConfig protocol() const;
  IndexConfig index() const;
};

struct ConfigIssue {
  std::string key;
  std::string message;
};

/// Every invariant violation, keyed by the offending scenario key.
std::vector<ConfigIssue> validate(const ScenarioConfig& config);

class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(std::string key, int line, const std::string& message);

  const std::string& key() const { return key_; }
  /// 1-based line in the scenario file, 0 when unknown.
  int line() const { return line_; }

 private:
  std::string key_;
  int line_;
};

}  // namespace dualfeed
