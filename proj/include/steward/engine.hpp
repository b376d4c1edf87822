#pragma once

#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "steward/backend.hpp"
#include "steward/device.hpp"
#include "steward/memory.hpp"
#include "steward/model.hpp"
#include "steward/trace.hpp"

namespace steward {

struct RunConfig {
  int n_try = 3;
  int n_step = 20;
  bool update_memory = true;
  bool verbose = false;  // record backend exchanges in the trace

  void validate() const;
};

struct AttemptLog {
  int attempt = 0;
  std::vector<std::string> keys;  // action keys, launch included
  Verdict verdict = Verdict::kError;
  std::string rationale;
};

struct TaskOutcome {
  std::string task_id;
  std::string app_id;
  std::string description;  // as last dispatched (after adjustment)
  int attempts = 0;
  Verdict final_verdict = Verdict::kError;
  bool skipped = false;  // never dispatched: an inbound result never arrived
  std::vector<AttemptLog> log;
};

struct RunReport {
  std::string instruction_id;
  std::vector<TaskOutcome> tasks;
  std::vector<std::string> apps_touched;  // in order of first launch
  int total_actions = 0;
  long tokens = 0;
  bool success = false;
  std::string error;            // set when scheduling failed
  std::vector<bool> goals_met;  // filled by the benchmark harness, one per ground-truth task
  double wall_ms = 0;           // not written to traces
};

void to_json(nlohmann::json& j, const RunReport& r);
void from_json(const nlohmann::json& j, RunReport& r);

/// Called at the end of a run, before the report record is written.
using GoalProbe = std::function<std::vector<bool>(const DeviceEnv&)>;

/// Schedules the instruction once and drives every task in topological order
/// with up to n_try attempts each. Scheduling failures produce a report with
/// no tasks attempted rather than an exception.
RunReport run_instruction(const Instruction& instr, DeviceEnv& env, const RunConfig& cfg, MemoryStore& memory,
                          AgentBackend& backend, TraceWriter* trace = nullptr, const GoalProbe& probe = {});

}  // namespace steward
