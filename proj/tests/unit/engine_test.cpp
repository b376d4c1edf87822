#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "helpers.hpp"
#include "steward/bench.hpp"
#include "steward/error.hpp"
#include "steward/oracle.hpp"

namespace steward {
namespace {

using nlohmann::json;
using testing::FakeBackend;
using testing::registry;

std::vector<GeneratedInstruction> fixture() {
  return load_suite(default_data_dir() / "fixtures" / "flight_alarm_note.json");
}

std::vector<json> parse_lines(const std::string& s) {
  std::vector<json> out;
  std::istringstream in(s);
  std::string line;
  while (std::getline(in, line)) out.push_back(json::parse(line));
  return out;
}

struct Run {
  RunReport report;
  std::vector<json> trace;
  std::string bytes;
};

Run run_fixture(FaultPolicy fault, RunConfig cfg, MemoryStore* mem = nullptr) {
  auto suite = fixture();
  MemoryStore local(*registry());
  MemoryStore& m = mem ? *mem : local;
  OracleBackend oracle(std::make_shared<ScriptDb>(suite), fault);
  std::ostringstream out;
  TraceWriter trace(out);
  DeviceEnv env(registry());
  const auto& truth = suite[0].truth;
  auto report = run_instruction(suite[0].instruction, env, cfg, m, oracle, &trace,
                                [&](const DeviceEnv& e) { return check_goals(e, truth); });
  return {report, parse_lines(out.str()), out.str()};
}

std::vector<json> of_kind(const std::vector<json>& trace, const std::string& kind) {
  std::vector<json> out;
  for (const auto& r : trace) {
    if (r["kind"] == kind) out.push_back(r);
  }
  return out;
}

TEST(Engine, FlightFixtureFlowsInformation) {
  auto run = run_fixture({}, {});
  const auto& r = run.report;
  EXPECT_TRUE(r.success);
  EXPECT_EQ(r.apps_touched, (std::vector<std::string>{"expedia", "clock", "notes"}));
  EXPECT_EQ(r.goals_met, (std::vector<bool>{true, true, true}));
  auto deliveries = of_kind(run.trace, "delivery");
  ASSERT_EQ(deliveries.size(), 2u);
  for (const auto& d : deliveries) EXPECT_EQ(d["from"], "t1");
  std::map<std::string, std::string> values;
  for (const auto& d : deliveries) values[d["label"].get<std::string>()] = d["value"].get<std::string>();
  EXPECT_EQ(values["arrival_time"], "6:30 p.m.");
  EXPECT_EQ(values["flight_info"], "Flight CA937 from Shanghai to London, departs 1:20 p.m., arrives 6:30 p.m.");
  ASSERT_EQ(r.tasks.size(), 3u);
  EXPECT_EQ(r.tasks[1].description.find("{"), std::string::npos);
  EXPECT_NE(r.tasks[1].description.find("6:30 p.m."), std::string::npos);
}

TEST(Engine, RetryRecoversFromOneWrongAction) {
  FaultPolicy fault{FaultMode::kWrongActionOnce, 1, 2, 0};
  auto run = run_fixture(fault, {});
  EXPECT_TRUE(run.report.success);
  EXPECT_EQ(run.report.tasks[0].attempts, 2);
  EXPECT_EQ(of_kind(run.trace, "reflection").size(), 1u);
  auto starts = of_kind(run.trace, "attempt_start");
  ASSERT_GE(starts.size(), 2u);
  EXPECT_TRUE(starts[1].contains("reflection_tip"));
}

TEST(Engine, SingleTryFailsAndSkipsDependents) {
  FaultPolicy fault{FaultMode::kWrongActionOnce, 1, 2, 0};
  RunConfig cfg;
  cfg.n_try = 1;
  auto run = run_fixture(fault, cfg);
  const auto& r = run.report;
  EXPECT_FALSE(r.success);
  ASSERT_EQ(r.tasks.size(), 3u);
  EXPECT_EQ(r.tasks[0].final_verdict, Verdict::kError);
  EXPECT_TRUE(r.tasks[1].skipped);
  EXPECT_TRUE(r.tasks[2].skipped);
  EXPECT_EQ(r.apps_touched, std::vector<std::string>{"expedia"});
  EXPECT_TRUE(of_kind(run.trace, "delivery").empty());
  EXPECT_EQ(r.goals_met, (std::vector<bool>{false, false, false}));
}

TEST(Engine, DroppedResultIsRetried) {
  FaultPolicy fault{FaultMode::kDropResultOnce, 1, 2, 0};
  auto run = run_fixture(fault, {});
  EXPECT_TRUE(run.report.success);
  EXPECT_EQ(run.report.tasks[0].attempts, 2);
  auto evals = of_kind(run.trace, "evaluation");
  ASSERT_FALSE(evals.empty());
  EXPECT_EQ(evals[0]["verdict"], "ERROR");
  EXPECT_EQ(evals[0]["downgraded_from"], "SUCCESS");
}

TEST(Engine, TraceShapeAndBudgets) {
  auto run = run_fixture({FaultMode::kWrongActionOnce, 0, 0, 5}, {});
  long seq = 0;
  for (const auto& rec : run.trace) {
    EXPECT_EQ(rec["run"], "fig-001");
    EXPECT_GT(rec["seq"].get<long>(), seq);
    seq = rec["seq"].get<long>();
  }
  EXPECT_EQ(run.trace.front()["kind"], "schedule");
  EXPECT_EQ(run.trace.back()["kind"], "report");
  for (const auto& s : of_kind(run.trace, "step")) {
    EXPECT_LE(s["index"].get<int>(), 20);
  }
  for (const auto& s : of_kind(run.trace, "attempt_start")) {
    EXPECT_LE(s["attempt"].get<int>(), 3);
  }
  RunConfig bad;
  bad.n_try = 0;
  auto suite = fixture();
  DeviceEnv env(registry());
  MemoryStore mem(*registry());
  FakeBackend be;
  EXPECT_THROW(run_instruction(suite[0].instruction, env, bad, mem, be), Error);
}

TEST(Engine, MemoryUpdatesOnlyAfterSuccess) {
  MemoryStore mem(*registry());
  RunConfig cfg;
  cfg.n_try = 1;
  run_fixture({FaultMode::kWrongActionOnce, 1, 2, 0}, cfg, &mem);
  EXPECT_TRUE(mem.guidelines().empty());
  EXPECT_TRUE(mem.expertise_for("expedia")->expertise.empty());

  auto run = run_fixture({}, {}, &mem);
  EXPECT_EQ(of_kind(run.trace, "memory_update").size(), 3u);
  EXPECT_EQ(mem.guidelines().size(), 3u);
  EXPECT_FALSE(mem.expertise_for("expedia")->expertise.empty());

  MemoryStore frozen(*registry());
  cfg = {};
  cfg.update_memory = false;
  run = run_fixture({}, cfg, &frozen);
  EXPECT_TRUE(of_kind(run.trace, "memory_update").empty());
  EXPECT_TRUE(frozen.guidelines().empty());
}

TEST(Engine, TraceBytesAreDeterministic) {
  FaultPolicy fault{FaultMode::kWrongActionOnce, 0, 0, 99};
  EXPECT_EQ(run_fixture(fault, {}).bytes, run_fixture(fault, {}).bytes);
}

TEST(Engine, SchedulingFailureYieldsEmptyReport) {
  auto suite = fixture();
  DeviceEnv env(registry());
  MemoryStore mem(*registry());
  FakeBackend be;  // proposes an empty graph twice: nothing maps to an app
  std::ostringstream out;
  TraceWriter trace(out);
  auto r = run_instruction(suite[0].instruction, env, {}, mem, be, &trace);
  EXPECT_FALSE(r.success);
  EXPECT_TRUE(r.tasks.empty());
  EXPECT_EQ(r.error.rfind("unschedulable_instruction", 0), 0u);
  auto recs = parse_lines(out.str());
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_TRUE(recs[0].contains("error"));
}

}  // namespace
}  // namespace steward
