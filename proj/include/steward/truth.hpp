#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "steward/device.hpp"
#include "steward/model.hpp"

namespace steward {

/// Ground truth for one task of a generated instruction.
struct TaskTruth {
  std::string task_id;
  std::string app_id;
  std::string app_name;
  std::string template_id;
  std::string capability;
  std::vector<ScriptStep> script;            // concrete, recorded at generation time
  std::vector<std::string> input_templates;  // per step; "{label}" marks delivered values
  std::map<std::string, std::string> results;  // outbound edge label -> expected value
  GoalCall goal;

  /// "click:<app name>" followed by the script keys.
  std::vector<std::string> expected_keys() const;
};

struct GroundTruth {
  SchedulingGraph graph;
  std::vector<TaskTruth> tasks;  // in graph node order

  const TaskTruth* task(const std::string& task_id) const;
  const TaskTruth* task_for_app(const std::string& app_id) const;
};

struct GeneratedInstruction {
  Instruction instruction;
  GroundTruth truth;
};

/// Ground truths keyed by instruction id, shared read-only with the oracle.
class ScriptDb {
 public:
  ScriptDb() = default;
  explicit ScriptDb(const std::vector<GeneratedInstruction>& suite);

  void add(const std::string& instruction_id, GroundTruth truth);
  const GroundTruth* find(const std::string& instruction_id) const;
  std::size_t size() const { return truths_.size(); }

 private:
  std::map<std::string, GroundTruth> truths_;
};

void to_json(nlohmann::json& j, const ScriptStep& v);
void from_json(const nlohmann::json& j, ScriptStep& v);
void to_json(nlohmann::json& j, const TaskTruth& v);
void from_json(const nlohmann::json& j, TaskTruth& v);
void to_json(nlohmann::json& j, const GroundTruth& v);
void from_json(const nlohmann::json& j, GroundTruth& v);

}  // namespace steward
