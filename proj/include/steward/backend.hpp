#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "steward/model.hpp"

namespace steward {

// Queries carry references into caller-owned data; they live for one call.

struct ScheduleQuery {
  const Instruction& instruction;
  const std::vector<ExpertiseEntry>& expertise;
  std::vector<std::string> correction;  // violations of the previous proposal
};

struct PlanQuery {
  const Task& task;
  const std::string& instruction_id;
  const std::vector<GuidelineEntry>& guidelines;
};

struct PredictQuery {
  const StaffContext& ctx;
  const ScreenState& state;
  const std::vector<HistoryTriple>& history;
  std::string correction;  // why the previous answer was rejected
};

struct PredictReply {
  std::optional<Action> action;  // nullopt when the reply could not be parsed
  std::string thought;
};

struct SummarizeQuery {
  const Task& task;
  const ScreenState& state;  // before the action
  const Action& action;
  const StepOutcome& outcome;
};

struct EvaluateQuery {
  const Task& task;
  const std::string& instruction_id;
  const ExecutionHistory& history;
};

struct ReflectQuery {
  const Task& task;
  const std::string& instruction_id;
  const ExecutionHistory& history;
  const Evaluation& evaluation;
};

struct ExtractQuery {
  const Task& task;
  const std::string& instruction_id;
  const ExecutionHistory& history;
  std::vector<std::string> outbound_labels;
  int attempt = 1;
};

struct AdjustQuery {
  const Task& downstream;
  const ResultInfo& result;
};

struct ExpertiseQuery {
  const ExpertiseEntry& current;
  const ExpertiseCandidate& candidate;
};

struct ExpertiseVerdict {
  bool novel = false;
  std::string reason;
};

struct TokenUsage {
  long prompt = 0;
  long completion = 0;
  long total() const { return prompt + completion; }
};

/// One request/response pair, recorded for verbose traces.
struct Exchange {
  std::string kind;
  std::string request;
  std::string response;
};

/// Answers every steward and staff query. Responses are untrusted: callers
/// validate them before use.
class AgentBackend {
 public:
  virtual ~AgentBackend() = default;

  virtual std::string name() const = 0;
  virtual std::string config_digest() const = 0;

  virtual SchedulingProposal schedule(const ScheduleQuery& q) = 0;
  virtual TaskPlan plan(const PlanQuery& q) = 0;
  virtual PredictReply predict(const PredictQuery& q) = 0;
  virtual StepSummary summarize(const SummarizeQuery& q) = 0;
  virtual Evaluation evaluate(const EvaluateQuery& q) = 0;
  virtual ReflectionTip reflect(const ReflectQuery& q) = 0;
  virtual ExtractedExperience extract(const ExtractQuery& q) = 0;
  /// Rewritten task description with the result bound.
  virtual std::string adjust(const AdjustQuery& q) = 0;
  virtual ExpertiseVerdict expertise_decision(const ExpertiseQuery& q) = 0;

  virtual TokenUsage usage() const { return {}; }
  virtual std::vector<Exchange> drain_exchanges() { return {}; }
};

enum class FaultMode { kNone, kWrongActionOnce, kDropResultOnce };
std::string_view to_string(FaultMode m);
std::optional<FaultMode> parse_fault_mode(std::string_view s);

/// Deterministic fault injection for the oracle. Ordinals are 1-based; a
/// zero task ordinal targets every task and a zero step ordinal draws the
/// step from the seed per task.
struct FaultPolicy {
  FaultMode mode = FaultMode::kNone;
  int task_ordinal = 1;
  int step_ordinal = 2;
  std::uint64_t seed = 0;
};

}  // namespace steward
