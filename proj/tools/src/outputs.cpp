#include "dualfeed/cli/outputs.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace dualfeed::cli {

namespace {

template <typename T>
std::string opt(const std::optional<T>& v) {
  return v ? std::to_string(*v) : std::string();
}

std::string recovery_cell(const RecoveryRecord& r) {
  if (r.recovery_time) return std::to_string(*r.recovery_time);
  return r.censored ? std::string() : std::string("inf");
}

std::string node_label(NodeId id) { return id == kSourceId ? "S" : std::to_string(id.value); }

}  // namespace

OutputFormats parse_formats(const std::string& list) {
  OutputFormats f{false, false, false, false};
  std::stringstream in(list);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item == "csv") {
      f.csv = true;
    } else if (item == "jsonl") {
      f.jsonl = true;
    } else if (item == "dot") {
      f.dot = true;
    } else if (item == "histograms") {
      f.histograms = true;
    } else if (!item.empty()) {
      throw std::invalid_argument("unknown output format '" + item +
                                  "' (expected csv, jsonl, dot, histograms)");
    }
  }
  return f;
}

std::string metrics_csv(const MetricsRecord& metrics) {
  std::ostringstream os;
  os << "node_id,hop_f1,hop_f2,hop_diff,max_occupancy,underruns\n";
  for (const NodeMetrics& n : metrics.nodes) {
    os << n.node.value << ',' << opt(n.hop_f1) << ',' << opt(n.hop_f2) << ',' << opt(n.hop_diff) << ','
       << n.max_occupancy << ',' << n.underruns << '\n';
  }
  return os.str();
}

std::string recovery_csv(const MetricsRecord& metrics) {
  std::ostringstream os;
  os << "failure_node,fail_time,detect_time,resume_time,recovery_time,affected_count\n";
  for (const RecoveryRecord& r : metrics.recoveries) {
    os << r.failure_node.value << ',' << r.fail_time << ',' << opt(r.detect_time) << ','
       << opt(r.resume_time) << ',' << recovery_cell(r) << ','
       << r.affected_count << '\n';
  }
  return os.str();
}

std::string histograms_csv(const MetricsRecord& metrics) {
  std::ostringstream os;
  os << "histogram,bucket,count\n";
  for (const auto& [bucket, n] : metrics.out_degree_histogram) os << "out_degree," << bucket << ',' << n << '\n';
  for (const auto& [bucket, n] : metrics.hop_diff_histogram) os << "hop_diff," << bucket << ',' << n << '\n';
  return os.str();
}

std::string trace_jsonl(const std::vector<TraceRecord>& trace) {
  std::string out;
  for (const TraceRecord& r : trace) {
    nlohmann::ordered_json j;
    j["at"] = r.at;
    j["seq_no"] = r.seq_no;
    j["kind"] = r.kind;
    j["action"] = r.action;
    j["node"] = r.node.value;
    if (r.peer) j["peer"] = r.peer->value;
    if (r.feed) j["feed"] = to_string(*r.feed);
    j["value"] = r.value;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::string topology_dot(const Topology& topo, FeedId feed) {
  std::ostringstream os;
  os << "digraph " << to_string(feed) << " {\n";
  for (const auto& [id, snap] : topo.nodes) {
    os << "  \"" << node_label(id) << "\" [label=\"" << node_label(id);
    if (snap.forwarded_feed) os << " (" << to_string(*snap.forwarded_feed) << ')';
    os << "\"];\n";
  }
  for (const auto& [id, snap] : topo.nodes) {
    if (const auto p = snap.parent[slot(feed)]) {
      os << "  \"" << node_label(*p) << "\" -> \"" << node_label(id) << "\";\n";
    }
  }
  os << "}\n";
  return os.str();
}

std::vector<std::filesystem::path> emit_outputs(const RunResult& result,
                                                const std::filesystem::path& out_dir,
                                                const OutputFormats& formats) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) {
    throw std::runtime_error("cannot create output directory " + out_dir.string());
  }

  std::vector<std::pair<std::string, std::string>> files;
  if (formats.csv) {
    files.emplace_back("metrics.csv", metrics_csv(result.metrics));
    files.emplace_back("recovery.csv", recovery_csv(result.metrics));
  }
  if (formats.histograms) files.emplace_back("histograms.csv", histograms_csv(result.metrics));
  if (formats.jsonl) files.emplace_back("trace.jsonl", trace_jsonl(result.trace));
  if (formats.dot) {
    files.emplace_back("topology_f1.dot", topology_dot(result.topology, FeedId::F1));
    files.emplace_back("topology_f2.dot", topology_dot(result.topology, FeedId::F2));
  }

  std::vector<fs::path> written;
  auto cleanup = [&](const fs::path& tmp) {
    fs::remove(tmp, ec);
    for (const fs::path& p : written) fs::remove(p, ec);
  };
  for (const auto& [name, body] : files) {
    const fs::path target = out_dir / name;
    const fs::path tmp = out_dir / (name + ".tmp");
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      out << body;
      out.close();
      if (!out) {
        cleanup(tmp);
        throw std::runtime_error("cannot write " + target.string());
      }
    }
    fs::rename(tmp, target, ec);
    if (ec) {
      cleanup(tmp);
      throw std::runtime_error("cannot write " + target.string() + ": " + ec.message());
    }
    written.push_back(target);
  }
  return written;
}

}  // namespace dualfeed::cli
