#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dualfeed/engine.hpp"

namespace dualfeed::cli {

struct OutputFormats {
  bool csv = true;
  bool jsonl = false;
  bool dot = true;
  bool histograms = false;
};

/// Comma-separated subset of csv, jsonl, dot, histograms.
OutputFormats parse_formats(const std::string& list);

std::string metrics_csv(const MetricsRecord& metrics);
std::string recovery_csv(const MetricsRecord& metrics);
std::string histograms_csv(const MetricsRecord& metrics);
std::string trace_jsonl(const std::vector<TraceRecord>& trace);
std::string topology_dot(const Topology& topo, FeedId feed);

/// Writes the selected files into `out_dir` (created if missing). Each file is
/// written to a temporary name and renamed into place; on failure nothing
/// partial is left behind and std::runtime_error names the path.
std::vector<std::filesystem::path> emit_outputs(const RunResult& result,
                                                const std::filesystem::path& out_dir,
                                                const OutputFormats& formats);

}  // namespace dualfeed::cli
