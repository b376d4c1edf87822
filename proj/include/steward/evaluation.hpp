#pragma once

#include <map>
#include <string>
#include <vector>

#include "steward/backend.hpp"
#include "steward/model.hpp"

namespace steward {

/// Backend verdict, forced to ERROR when the attempt ran out of steps or
/// produced no history.
Evaluation evaluate(const ExecutionHistory& history, const Task& task, const std::string& instruction_id,
                    AgentBackend& backend);

ReflectionTip reflect(const ExecutionHistory& history, const Task& task, const std::string& instruction_id,
                      const Evaluation& evaluation, AgentBackend& backend);

/// Results for every outbound label (extras dropped), expertise and
/// guideline candidates. Throws Error(kMissingResult) when an outbound
/// label has no value.
ExtractedExperience extract(const ExecutionHistory& history, const Task& task, const std::string& instruction_id,
                            const std::vector<std::string>& outbound_labels, int attempt, AgentBackend& backend);

/// Placeholder substitution of `result` into `task`. The backend may reword
/// the description but must keep the text around the placeholder; otherwise
/// the mechanical substitution is used. Throws Error(kLabelMismatch) when
/// the task has no such unbound placeholder.
Task adjust(const Task& downstream, const ResultInfo& result, AgentBackend& backend);

struct PendingTask {
  Task task;
  std::vector<ResultInfo> received;  // results delivered so far
  std::vector<Task> revisions;       // descriptions before each adjustment
};
using TaskTable = std::map<std::string, PendingTask>;

struct Delivery {
  GraphEdge edge;
  ResultInfo result;
  bool adjusted = false;
  Task before;
  Task after;
};

/// Appends each result to the successor at the end of its matching edge and
/// binds the successor's placeholder. Only successors of `from_task_id`
/// change.
std::vector<Delivery> deliver_results(const SchedulingGraph& sg, const std::string& from_task_id,
                                      const std::vector<ResultInfo>& results, TaskTable& pending,
                                      AgentBackend& backend);

}  // namespace steward
