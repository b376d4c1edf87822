#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "steward/screen.hpp"

namespace steward {

struct Instruction {
  std::string id;
  std::string text;
  std::vector<std::string> labeled_apps;  // empty in live mode
  int complexity = 0;
};

struct Task {
  std::string task_id;
  std::string app_id;
  std::string description;
  std::vector<std::string> placeholders;  // unbound "{label}" slots, in order

  bool operator==(const Task&) const = default;
};

/// The placeholders currently present in `description`.
std::vector<std::string> placeholders_in(const std::string& description);

struct GraphNode {
  Task task;
  std::string staff_id;  // one staff agent per app: equals task.app_id

  bool operator==(const GraphNode&) const = default;
};

struct GraphEdge {
  std::string from;
  std::string to;
  std::string label;

  bool operator==(const GraphEdge&) const = default;
};

struct SchedulingGraph {
  std::vector<GraphNode> nodes;
  std::vector<GraphEdge> edges;

  const GraphNode* node(const std::string& task_id) const;
  std::vector<const GraphEdge*> outbound(const std::string& task_id) const;
  std::vector<const GraphEdge*> inbound(const std::string& task_id) const;

  bool operator==(const SchedulingGraph&) const = default;
};

struct SchedulingProposal {
  std::string thought;
  SchedulingGraph plan;
};

struct TaskPlan {
  std::vector<std::string> steps;
  std::vector<std::string> sources;  // guideline entry ids
};

struct StepSummary {
  std::string action_recap;
  std::string result;
  std::string element_note;
};

struct HistoryTriple {
  ScreenState state;  // observed before the action
  Action action = Action::finish();
  StepSummary summary;
  std::string key;    // action_key(action, state)
  std::string note;   // environment outcome note
  bool changed = false;
  StepError error = StepError::kNone;
};

enum class Termination { kFinish, kStepBudget };
std::string_view to_string(Termination t);

struct ExecutionHistory {
  std::string task_id;
  std::vector<HistoryTriple> triples;
  Termination terminated_by = Termination::kStepBudget;
  std::string error_note;  // set when the backend produced an unusable action
};

struct ResultInfo {
  std::string from_task_id;
  std::string info_label;
  std::string value;

  bool operator==(const ResultInfo&) const = default;
};

struct ReflectionTip {
  std::string diagnosis;
  std::string suggestion;
};

enum class Verdict { kSuccess, kError };
std::string_view to_string(Verdict v);

struct Evaluation {
  Verdict verdict = Verdict::kError;
  std::string rationale;
};

struct ExpertiseEntry {
  std::string app_id;
  std::string description;
  std::vector<std::string> expertise;

  bool operator==(const ExpertiseEntry&) const = default;
};

struct GuidelineEntry {
  std::string entry_id;
  std::string app_id;
  std::string task_text;
  std::vector<std::string> steps;

  bool operator==(const GuidelineEntry&) const = default;
};

struct ExpertiseCandidate {
  std::string app_id;
  std::string capability;
};

struct GuidelineCandidate {
  std::string app_id;
  std::vector<std::string> steps;
};

struct ExtractedExperience {
  std::vector<ResultInfo> results;
  ExpertiseCandidate expertise;
  GuidelineCandidate guideline;
};

struct StaffContext {
  Task task;
  std::string instruction_id;
  int attempt = 1;
  std::vector<ResultInfo> received_results;
  std::optional<ReflectionTip> reflection_tip;
  TaskPlan plan;
  std::optional<StepSummary> last_summary;
};

// JSON conversions used by traces, suite files and the LLM prompt builder.
void to_json(nlohmann::json& j, const Instruction& v);
void from_json(const nlohmann::json& j, Instruction& v);
void to_json(nlohmann::json& j, const Task& v);
void from_json(const nlohmann::json& j, Task& v);
void to_json(nlohmann::json& j, const SchedulingGraph& v);
void from_json(const nlohmann::json& j, SchedulingGraph& v);
void to_json(nlohmann::json& j, const StepSummary& v);
void to_json(nlohmann::json& j, const ResultInfo& v);
void from_json(const nlohmann::json& j, ResultInfo& v);
void to_json(nlohmann::json& j, const ReflectionTip& v);
void to_json(nlohmann::json& j, const ExpertiseEntry& v);
void from_json(const nlohmann::json& j, ExpertiseEntry& v);
void to_json(nlohmann::json& j, const GuidelineEntry& v);
void from_json(const nlohmann::json& j, GuidelineEntry& v);
void to_json(nlohmann::json& j, const ScreenState& v);

}  // namespace steward
