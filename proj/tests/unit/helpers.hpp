#pragma once

#include <functional>
#include <memory>

#include "steward/app.hpp"
#include "steward/backend.hpp"

namespace steward::testing {

inline std::shared_ptr<const AppRegistry> registry() {
  static auto reg = AppRegistry::load_dir(default_data_dir() / "apps");
  return reg;
}

/// Backend whose answers are set per test; unset hooks give inert defaults.
class FakeBackend : public AgentBackend {
 public:
  std::function<SchedulingProposal(const ScheduleQuery&)> on_schedule;
  std::function<TaskPlan(const PlanQuery&)> on_plan;
  std::function<PredictReply(const PredictQuery&)> on_predict;
  std::function<StepSummary(const SummarizeQuery&)> on_summarize;
  std::function<Evaluation(const EvaluateQuery&)> on_evaluate;
  std::function<ReflectionTip(const ReflectQuery&)> on_reflect;
  std::function<ExtractedExperience(const ExtractQuery&)> on_extract;
  std::function<std::string(const AdjustQuery&)> on_adjust;
  std::function<ExpertiseVerdict(const ExpertiseQuery&)> on_expertise;

  int schedule_calls = 0;
  int predict_calls = 0;

  std::string name() const override { return "fake"; }
  std::string config_digest() const override { return "0"; }

  SchedulingProposal schedule(const ScheduleQuery& q) override {
    ++schedule_calls;
    return on_schedule ? on_schedule(q) : SchedulingProposal{};
  }
  TaskPlan plan(const PlanQuery& q) override { return on_plan ? on_plan(q) : TaskPlan{}; }
  PredictReply predict(const PredictQuery& q) override {
    ++predict_calls;
    return on_predict ? on_predict(q) : PredictReply{Action::finish(), ""};
  }
  StepSummary summarize(const SummarizeQuery& q) override { return on_summarize ? on_summarize(q) : StepSummary{}; }
  Evaluation evaluate(const EvaluateQuery& q) override {
    return on_evaluate ? on_evaluate(q) : Evaluation{Verdict::kSuccess, "ok"};
  }
  ReflectionTip reflect(const ReflectQuery& q) override {
    return on_reflect ? on_reflect(q) : ReflectionTip{"went wrong", "try again"};
  }
  ExtractedExperience extract(const ExtractQuery& q) override {
    return on_extract ? on_extract(q) : ExtractedExperience{};
  }
  std::string adjust(const AdjustQuery& q) override { return on_adjust ? on_adjust(q) : std::string(); }
  ExpertiseVerdict expertise_decision(const ExpertiseQuery& q) override {
    return on_expertise ? on_expertise(q) : ExpertiseVerdict{true, "new"};
  }
};

}  // namespace steward::testing
