#include "steward/execution.hpp"

#include <algorithm>

#include "steward/error.hpp"
#include "steward/text.hpp"

namespace steward {

TaskPlan plan_task(const Task& task, const std::string& instruction_id, const MemoryStore& memory,
                   AgentBackend& backend) {
  auto retrieved = memory.retrieve_guidelines(task.app_id, task.description, 3);
  TaskPlan plan = backend.plan({task, instruction_id, retrieved});
  std::vector<std::string> kept;
  for (const auto& id : plan.sources) {
    bool known = std::any_of(retrieved.begin(), retrieved.end(), [&](const auto& g) { return g.entry_id == id; });
    if (known && std::find(kept.begin(), kept.end(), id) == kept.end()) kept.push_back(id);
  }
  plan.sources = std::move(kept);
  if (!retrieved.empty() && plan.steps.empty()) {
    plan.steps = retrieved.front().steps;
    if (plan.sources.empty()) plan.sources.push_back(retrieved.front().entry_id);
  }
  return plan;
}

namespace {

std::string check_action(const std::optional<Action>& a, const ScreenState& state) {
  if (!a) return "the reply did not contain a well-formed action";
  if (a->type() == ActionType::kClick && !state.find(a->element_id())) {
    return "element " + std::to_string(a->element_id()) + " does not exist on the current screen";
  }
  if (a->type() == ActionType::kInput && a->text().empty()) return "input text is empty";
  return {};
}

}  // namespace

Action predict_action(const StaffContext& ctx, const ScreenState& state, const std::vector<HistoryTriple>& history,
                      AgentBackend& backend) {
  PredictQuery q{ctx, state, history, {}};
  PredictReply r = backend.predict(q);
  std::string problem = check_action(r.action, state);
  if (problem.empty()) return *r.action;
  q.correction = problem;
  r = backend.predict(q);
  std::string second = check_action(r.action, state);
  if (second.empty()) return *r.action;
  throw BackendError(ErrorKind::kInvalidActionFromBackend, "invalid action after correction: " + second);
}

StepSummary compose_summary(const ScreenState& state, const Action& action, const StepOutcome& outcome) {
  StepSummary s;
  switch (action.type()) {
    case ActionType::kClick: {
      const Widget* w = state.find(action.element_id());
      std::string label = w ? widget_label(*w) : "element " + std::to_string(action.element_id());
      s.action_recap = "Clicked \"" + label + "\" (element " + std::to_string(action.element_id()) + ")";
      s.element_note = w ? std::string(to_string(w->kind)) + " \"" + label + "\" on screen " + state.screen_id
                         : "no element " + std::to_string(action.element_id()) + " on screen " + state.screen_id;
      break;
    }
    case ActionType::kInput:
      s.action_recap = "Typed \"" + action.text() + "\"";
      s.element_note = "focused text field on screen " + state.screen_id;
      break;
    case ActionType::kSwipe:
      s.action_recap = "Swiped " + std::string(to_string(action.direction()));
      s.element_note = "scrollable screen " + state.screen_id;
      break;
    case ActionType::kBack:
      s.action_recap = "Pressed back";
      s.element_note = "system back navigation from screen " + state.screen_id;
      break;
    case ActionType::kFinish:
      s.action_recap = "Declared the task finished";
      s.element_note = "no element touched on screen " + state.screen_id;
      break;
  }
  s.result = outcome.note.empty() ? (outcome.changed ? "State changed" : "Nothing changed") : outcome.note;
  return s;
}

StepSummary summarize_step(const Task& task, const ScreenState& state, const Action& action,
                           const StepOutcome& outcome, AgentBackend& backend) {
  StepSummary fallback = compose_summary(state, action, outcome);
  StepSummary s;
  try {
    s = backend.summarize({task, state, action, outcome});
  } catch (const BackendError&) {
    return fallback;
  }
  if (text::trim(s.action_recap).empty()) s.action_recap = fallback.action_recap;
  if (text::trim(s.result).empty()) s.result = fallback.result;
  if (text::trim(s.element_note).empty()) s.element_note = fallback.element_note;
  return s;
}

ExecutionHistory run_assigned_task(StaffContext& ctx, DeviceEnv& env, AgentBackend& backend, int n_step,
                                   const StepObserver& observer) {
  if (n_step < 1) throw Error(ErrorKind::kConfig, "n_step must be at least 1");
  ExecutionHistory h;
  h.task_id = ctx.task.task_id;
  auto record = [&](const ScreenState& state, const Action& action) {
    StepOutcome outcome = env.apply_action(action);
    HistoryTriple t;
    t.state = state;
    t.action = action;
    t.key = action_key(action, state);
    t.note = outcome.note;
    t.changed = outcome.changed;
    t.error = outcome.error;
    t.summary = summarize_step(ctx.task, state, action, outcome, backend);
    ctx.last_summary = t.summary;
    h.triples.push_back(std::move(t));
    if (observer) observer(h.triples.back(), h.triples.size() - 1);
  };

  if (env.foreground() != ctx.task.app_id) {
    if (!env.at_home()) env.go_home();
    record(env.get_state(), Action::click(env.launcher_id(ctx.task.app_id)));
  }
  while (static_cast<int>(h.triples.size()) < n_step &&
         (h.triples.empty() || !h.triples.back().action.is_finish())) {
    ScreenState state = env.get_state();
    Action action = Action::finish();
    try {
      action = predict_action(ctx, state, h.triples, backend);
    } catch (const BackendError& e) {
      h.error_note = e.what();
      h.terminated_by = Termination::kStepBudget;
      return h;
    }
    record(state, action);
  }
  h.terminated_by = !h.triples.empty() && h.triples.back().action.is_finish() ? Termination::kFinish
                                                                             : Termination::kStepBudget;
  return h;
}

}  // namespace steward
