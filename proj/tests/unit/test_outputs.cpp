#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "dualfeed/cli/outputs.hpp"
#include "dualfeed/cli/scenario_io.hpp"

using namespace dualfeed;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

fs::path scratch(const char* name) {
  const fs::path p = fs::temp_directory_path() / (std::string("dualfeed_test_") + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_SUITE("outputs") {

TEST_CASE("source-only run") {
  ScenarioConfig c;
  c.node_count = 0;
  c.horizon = 20;
  const RunResult r = run_scenario(c);
  const fs::path dir = scratch("empty");
  const auto files = cli::emit_outputs(r, dir, cli::OutputFormats{});
  CHECK(files.size() == 4);
  CHECK(slurp(dir / "metrics.csv") == "node_id,hop_f1,hop_f2,hop_diff,max_occupancy,underruns\n");
  CHECK(slurp(dir / "recovery.csv") ==
        "failure_node,fail_time,detect_time,resume_time,recovery_time,affected_count\n");
  CHECK(slurp(dir / "topology_f1.dot") == "digraph F1 {\n  \"S\" [label=\"S\"];\n}\n");
  CHECK(slurp(dir / "topology_f2.dot") == "digraph F2 {\n  \"S\" [label=\"S\"];\n}\n");
  fs::remove_all(dir);
}

TEST_CASE("ten-node metrics") {
  const RunResult r = run_scenario(cli::load_scenario(DUALFEED_SCENARIO_DIR "/join10.scenario"));
  const auto rows = lines(cli::metrics_csv(r.metrics));
  REQUIRE(rows.size() == 10);
  CHECK(rows[9].rfind("9,5,5,0,", 0) == 0);
  CHECK(rows[1].rfind("1,1,2,1,", 0) == 0);
}

TEST_CASE("failure replay reports six affected nodes") {
  const RunResult r = run_scenario(cli::load_scenario(DUALFEED_SCENARIO_DIR "/fail3_ine.scenario"));
  const auto rows = lines(cli::recovery_csv(r.metrics));
  REQUIRE(rows.size() == 2);
  const std::string& row = rows[1];
  CHECK(row.rfind("3,100,", 0) == 0);
  CHECK(row.substr(row.rfind(',') + 1) == "6");
}

TEST_CASE("recovery cells") {
  MetricsRecord m;
  RecoveryRecord open;
  open.failure_node = NodeId{4};
  open.fail_time = 50;
  open.affected_count = 2;
  m.recoveries.push_back(open);
  open.censored = true;
  m.recoveries.push_back(open);
  const auto rows = lines(cli::recovery_csv(m));
  REQUIRE(rows.size() == 3);
  CHECK(rows[1] == "4,50,,,inf,2");
  CHECK(rows[2] == "4,50,,,,2");
}

TEST_CASE("trace lines are json objects") {
  std::vector<TraceRecord> trace{{5, 12, "NodeFail", "fail", NodeId{3}, std::nullopt, FeedId::F1, 0}};
  CHECK(cli::trace_jsonl(trace) ==
        "{\"at\":5,\"seq_no\":12,\"kind\":\"NodeFail\",\"action\":\"fail\",\"node\":3,\"feed\":\"F1\",\"value\":0}\n");
}

TEST_CASE("format list") {
  const cli::OutputFormats f = cli::parse_formats("jsonl,histograms");
  CHECK_FALSE(f.csv);
  CHECK(f.jsonl);
  CHECK_FALSE(f.dot);
  CHECK(f.histograms);
  CHECK_THROWS_AS(cli::parse_formats("csv,xml"), std::invalid_argument);
}

TEST_CASE("unwritable directory leaves nothing behind") {
  const fs::path blocker = scratch("blocker");
  { std::ofstream(blocker) << "x"; }
  ScenarioConfig c;
  c.horizon = 5;
  const RunResult r = run_scenario(c);
  CHECK_THROWS_AS(cli::emit_outputs(r, blocker / "sub", cli::OutputFormats{}), std::runtime_error);
  CHECK(fs::is_regular_file(blocker));
  fs::remove(blocker);
}

}  // TEST_SUITE
