#include "dualfeed/cli/scenario_io.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

namespace dualfeed::cli {

namespace {

int line_of(const YAML::Node& n) {
  const YAML::Mark m = n.Mark();
  return m.line >= 0 ? m.line + 1 : 0;
}

class Reader {
 public:
  [[noreturn]] void fail(const std::string& key, const YAML::Node& at, const std::string& msg) const {
    throw ScenarioError(key, line_of(at), msg);
  }

  std::int64_t integer(const YAML::Node& n, const std::string& key, std::int64_t lo,
                       std::int64_t hi = std::numeric_limits<std::int64_t>::max()) const {
    if (!n.IsScalar()) fail(key, n, "expected an integer");
    std::int64_t v = 0;
    try {
      v = n.as<std::int64_t>();
    } catch (const YAML::BadConversion&) {
      fail(key, n, "expected an integer, got '" + n.Scalar() + "'");
    }
    if (v < lo || v > hi) {
      fail(key, n, "value " + std::to_string(v) + " out of range [" + std::to_string(lo) + ", " +
                       std::to_string(hi) + "]");
    }
    return v;
  }

  std::uint64_t unsigned64(const YAML::Node& n, const std::string& key) const {
    if (!n.IsScalar() || (!n.Scalar().empty() && n.Scalar()[0] == '-')) {
      fail(key, n, "expected a non-negative integer");
    }
    try {
      return n.as<std::uint64_t>();
    } catch (const YAML::BadConversion&) {
      fail(key, n, "expected a non-negative integer, got '" + n.Scalar() + "'");
    }
  }

  std::uint32_t u32(const YAML::Node& n, const std::string& key) const {
    return static_cast<std::uint32_t>(integer(n, key, 0, std::numeric_limits<std::uint32_t>::max()));
  }

  double real(const YAML::Node& n, const std::string& key) const {
    if (!n.IsScalar()) fail(key, n, "expected a number");
    try {
      return n.as<double>();
    } catch (const YAML::BadConversion&) {
      fail(key, n, "expected a number, got '" + n.Scalar() + "'");
    }
  }

  bool boolean(const YAML::Node& n, const std::string& key) const {
    if (!n.IsScalar()) fail(key, n, "expected true or false");
    try {
      return n.as<bool>();
    } catch (const YAML::BadConversion&) {
      fail(key, n, "expected true or false, got '" + n.Scalar() + "'");
    }
  }

  std::string text(const YAML::Node& n, const std::string& key) const {
    if (!n.IsScalar()) fail(key, n, "expected a string");
    return n.Scalar();
  }

  NodeId node_id(const YAML::Node& n, const std::string& key) const {
    if (n.IsScalar() && n.Scalar() == "S") return kSourceId;
    return NodeId{u32(n, key)};
  }

  // Applies `handlers` to each entry of map `m`; unknown keys are errors.
  void each(const YAML::Node& m, const std::string& prefix,
            const std::map<std::string, std::function<void(const YAML::Node&)>>& handlers) {
    if (!m.IsMap()) fail(prefix.empty() ? "scenario" : prefix, m, "expected a mapping");
    for (auto it = m.begin(); it != m.end(); ++it) {
      const std::string name = it->first.as<std::string>();
      const std::string key = prefix.empty() ? name : prefix + "." + name;
      auto h = handlers.find(name);
      if (h == handlers.end()) {
        std::string known;
        for (const auto& [k, _] : handlers) known += (known.empty() ? "" : ", ") + k;
        fail(key, it->first, "unknown key (expected one of: " + known + ")");
      }
      lines[key] = line_of(it->first);
      h->second(it->second);
    }
  }

  std::vector<ScheduledEvent> schedule(const YAML::Node& n, const std::string& key) {
    if (!n.IsSequence()) fail(key, n, "expected a list of {node, at}");
    std::vector<ScheduledEvent> out;
    for (const YAML::Node& item : n) {
      ScheduledEvent e;
      bool has_node = false, has_at = false;
      each(item, key, {
          {"node", [&](const YAML::Node& v) { e.node = node_id(v, key + ".node"); has_node = true; }},
          {"at", [&](const YAML::Node& v) { e.at = integer(v, key + ".at", 0); has_at = true; }},
      });
      if (!has_node || !has_at) fail(key, item, "each entry needs both node and at");
      out.push_back(e);
    }
    return out;
  }

  std::map<std::string, int> lines;
};

}  // namespace

ScenarioConfig parse_scenario(std::string_view text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::ParserException& e) {
    throw ScenarioError("scenario", e.mark.line + 1, "parse error: " + e.msg);
  }

  ScenarioConfig c;
  Reader r;
  if (root.IsNull()) root = YAML::Node(YAML::NodeType::Map);

  auto tick = [&](Tick& field, const char* key, std::int64_t lo = 0) {
    return [&field, &r, key, lo](const YAML::Node& v) { field = r.integer(v, key, lo); };
  };
  auto count = [&](std::uint32_t& field, const char* key) {
    return [&field, &r, key](const YAML::Node& v) { field = r.u32(v, key); };
  };
  auto real = [&](double& field, const char* key) {
    return [&field, &r, key](const YAML::Node& v) { field = r.real(v, key); };
  };

  r.each(root, "", {
      {"node_count", count(c.node_count, "node_count")},
      {"seed", [&](const YAML::Node& v) { c.seed = r.unsigned64(v, "seed"); }},
      {"horizon", tick(c.horizon, "horizon", 1)},
      {"arrival_process",
       [&](const YAML::Node& v) {
         const std::string s = r.text(v, "arrival_process");
         if (s == "fixed") {
           c.arrival_process = ArrivalProcess::Fixed;
         } else if (s == "poisson") {
           c.arrival_process = ArrivalProcess::Poisson;
         } else {
           r.fail("arrival_process", v, "'" + s + "' is not one of fixed, poisson");
         }
       }},
      {"join_start", tick(c.join_start, "join_start")},
      {"join_interval", tick(c.join_interval, "join_interval", 1)},
      {"arrival_rate", real(c.arrival_rate, "arrival_rate")},
      {"mean_lifetime", real(c.mean_lifetime, "mean_lifetime")},
      {"departure_failure_fraction", real(c.departure_failure_fraction, "departure_failure_fraction")},
      {"max_churn_events", count(c.max_churn_events, "max_churn_events")},
      {"random_failure_fraction", real(c.random_failure_fraction, "random_failure_fraction")},
      {"random_failure_start", tick(c.random_failure_start, "random_failure_start")},
      {"random_failure_end", tick(c.random_failure_end, "random_failure_end")},
      {"strategy",
       [&](const YAML::Node& v) {
         const std::string s = r.text(v, "strategy");
         const auto parsed = parse_strategy(s);
         if (!parsed) r.fail("strategy", v, "'" + s + "' is not one of HOLD, UNPUBLISH, INE");
         c.strategy = *parsed;
       }},
      {"max_out_degree", count(c.max_out_degree, "max_out_degree")},
      {"source_per_feed_capacity", count(c.source_per_feed_capacity, "source_per_feed_capacity")},
      {"transition_duration", tick(c.transition_duration, "transition_duration", 1)},
      {"failure_timeout", tick(c.failure_timeout, "failure_timeout", 1)},
      {"playout_lag", count(c.playout_lag, "playout_lag")},
      {"poll_interval", tick(c.poll_interval, "poll_interval", 1)},
      {"refresh_ttl", tick(c.refresh_ttl, "refresh_ttl", 1)},
      {"optimizer_period", tick(c.optimizer_period, "optimizer_period")},
      {"cc_report_period", tick(c.cc_report_period, "cc_report_period", 1)},
      {"child_timeout", tick(c.child_timeout, "child_timeout", 1)},
      {"max_redirects", count(c.max_redirects, "max_redirects")},
      {"attach_timeout", tick(c.attach_timeout, "attach_timeout")},
      {"index_latency", tick(c.index_latency, "index_latency")},
      {"hop_count_parent_policy",
       [&](const YAML::Node& v) { c.hop_count_parent_policy = r.boolean(v, "hop_count_parent_policy"); }},
      {"failures", [&](const YAML::Node& v) { c.failures = r.schedule(v, "failures"); }},
      {"leaves", [&](const YAML::Node& v) { c.leaves = r.schedule(v, "leaves"); }},
      {"link",
       [&](const YAML::Node& v) {
         r.each(v, "link", {
             {"mode",
              [&](const YAML::Node& m) {
                const std::string s = r.text(m, "link.mode");
                if (s == "uniform") {
                  c.link.mode = LinkMode::Uniform;
                } else if (s == "per-pair") {
                  c.link.mode = LinkMode::PerPair;
                } else if (s == "seeded-random") {
                  c.link.mode = LinkMode::SeededRandom;
                } else {
                  r.fail("link.mode", m, "'" + s + "' is not one of uniform, per-pair, seeded-random");
                }
              }},
             {"base_delay", tick(c.link.base_delay, "link.base_delay")},
             {"jitter", tick(c.link.jitter, "link.jitter")},
             {"pairs",
              [&](const YAML::Node& list) {
                if (!list.IsSequence()) r.fail("link.pairs", list, "expected a list of {a, b, delay}");
                for (const YAML::Node& item : list) {
                  LinkPair p;
                  r.each(item, "link.pairs", {
                      {"a", [&](const YAML::Node& x) { p.a = r.node_id(x, "link.pairs.a"); }},
                      {"b", [&](const YAML::Node& x) { p.b = r.node_id(x, "link.pairs.b"); }},
                      {"delay", [&](const YAML::Node& x) { p.delay = r.integer(x, "link.pairs.delay", 0); }},
                  });
                  c.link.pairs.push_back(p);
                }
              }},
         });
       }},
  });

  const auto issues = validate(c);
  if (!issues.empty()) {
    const ConfigIssue& first = issues.front();
    auto it = r.lines.find(first.key);
    throw ScenarioError(first.key, it == r.lines.end() ? 0 : it->second, first.message);
  }
  return c;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("scenario", 0, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

std::string write_scenario(const ScenarioConfig& c) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "node_count" << YAML::Value << c.node_count;
  out << YAML::Key << "seed" << YAML::Value << c.seed;
  out << YAML::Key << "horizon" << YAML::Value << c.horizon;
  out << YAML::Key << "arrival_process" << YAML::Value << std::string(to_string(c.arrival_process));
  out << YAML::Key << "join_start" << YAML::Value << c.join_start;
  out << YAML::Key << "join_interval" << YAML::Value << c.join_interval;
  out << YAML::Key << "arrival_rate" << YAML::Value << c.arrival_rate;
  out << YAML::Key << "mean_lifetime" << YAML::Value << c.mean_lifetime;
  out << YAML::Key << "departure_failure_fraction" << YAML::Value << c.departure_failure_fraction;
  out << YAML::Key << "max_churn_events" << YAML::Value << c.max_churn_events;
  out << YAML::Key << "random_failure_fraction" << YAML::Value << c.random_failure_fraction;
  out << YAML::Key << "random_failure_start" << YAML::Value << c.random_failure_start;
  out << YAML::Key << "random_failure_end" << YAML::Value << c.random_failure_end;
  out << YAML::Key << "strategy" << YAML::Value << std::string(to_string(c.strategy));
  out << YAML::Key << "max_out_degree" << YAML::Value << c.max_out_degree;
  out << YAML::Key << "source_per_feed_capacity" << YAML::Value << c.source_per_feed_capacity;
  out << YAML::Key << "transition_duration" << YAML::Value << c.transition_duration;
  out << YAML::Key << "failure_timeout" << YAML::Value << c.failure_timeout;
  out << YAML::Key << "playout_lag" << YAML::Value << c.playout_lag;
  out << YAML::Key << "poll_interval" << YAML::Value << c.poll_interval;
  out << YAML::Key << "refresh_ttl" << YAML::Value << c.refresh_ttl;
  out << YAML::Key << "optimizer_period" << YAML::Value << c.optimizer_period;
  out << YAML::Key << "cc_report_period" << YAML::Value << c.cc_report_period;
  out << YAML::Key << "child_timeout" << YAML::Value << c.child_timeout;
  out << YAML::Key << "max_redirects" << YAML::Value << c.max_redirects;
  out << YAML::Key << "attach_timeout" << YAML::Value << c.attach_timeout;
  out << YAML::Key << "index_latency" << YAML::Value << c.index_latency;
  out << YAML::Key << "hop_count_parent_policy" << YAML::Value << c.hop_count_parent_policy;

  out << YAML::Key << "link" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "mode" << YAML::Value << std::string(to_string(c.link.mode));
  out << YAML::Key << "base_delay" << YAML::Value << c.link.base_delay;
  out << YAML::Key << "jitter" << YAML::Value << c.link.jitter;
  out << YAML::Key << "pairs" << YAML::Value << YAML::BeginSeq;
  for (const LinkPair& p : c.link.pairs) {
    out << YAML::Flow << YAML::BeginMap << YAML::Key << "a" << YAML::Value << p.a.value << YAML::Key << "b"
        << YAML::Value << p.b.value << YAML::Key << "delay" << YAML::Value << p.delay << YAML::EndMap;
  }
  out << YAML::EndSeq << YAML::EndMap;

  auto schedule = [&](const char* key, const std::vector<ScheduledEvent>& list) {
    out << YAML::Key << key << YAML::Value << YAML::BeginSeq;
    for (const ScheduledEvent& e : list) {
      out << YAML::Flow << YAML::BeginMap << YAML::Key << "node" << YAML::Value << e.node.value << YAML::Key
          << "at" << YAML::Value << e.at << YAML::EndMap;
    }
    out << YAML::EndSeq;
  };
  schedule("failures", c.failures);
  schedule("leaves", c.leaves);
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace dualfeed::cli
