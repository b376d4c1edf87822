#pragma once

#include <memory>

#include "steward/backend.hpp"
#include "steward/truth.hpp"

namespace steward {

/// Deterministic backend that answers from generated ground truth.
///
/// Scheduling keeps the ground-truth decomposition and information flow but
/// assigns each task to the app whose expertise entry ranks first for the
/// task text, so the quality of the expertise memory is observable.
/// Execution replays the task script, resolving click targets by label on the
/// live screen and typed values from the delivered results.
class OracleBackend : public AgentBackend {
 public:
  OracleBackend(std::shared_ptr<const ScriptDb> scripts, FaultPolicy fault = {});

  std::string name() const override { return "oracle"; }
  std::string config_digest() const override;

  SchedulingProposal schedule(const ScheduleQuery& q) override;
  TaskPlan plan(const PlanQuery& q) override;
  PredictReply predict(const PredictQuery& q) override;
  StepSummary summarize(const SummarizeQuery& q) override;
  Evaluation evaluate(const EvaluateQuery& q) override;
  ReflectionTip reflect(const ReflectQuery& q) override;
  ExtractedExperience extract(const ExtractQuery& q) override;
  std::string adjust(const AdjustQuery& q) override;
  ExpertiseVerdict expertise_decision(const ExpertiseQuery& q) override;

  /// 1-based history position at which the wrong-action fault fires for the
  /// task, or 0 when the task is not targeted.
  int fault_step(const std::string& instruction_id, const std::string& task_id) const;

 private:
  const GroundTruth& truth(const std::string& instruction_id) const;
  const TaskTruth& task_truth(const std::string& instruction_id, const std::string& task_id) const;
  bool targeted(const std::string& instruction_id, const std::string& task_id) const;

  std::shared_ptr<const ScriptDb> scripts_;
  FaultPolicy fault_;
};

/// Substitutes delivered values into an input template.
std::string resolve_input(const std::string& input_template, const std::vector<ResultInfo>& received,
                          const std::string& fallback);

}  // namespace steward
