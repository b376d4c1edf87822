#include "steward/oracle.hpp"

#include <algorithm>

#include "steward/error.hpp"
#include "steward/execution.hpp"
#include "steward/memory.hpp"
#include "steward/recruitment.hpp"
#include "steward/text.hpp"

namespace steward {

std::string_view to_string(FaultMode m) {
  switch (m) {
    case FaultMode::kNone: return "none";
    case FaultMode::kWrongActionOnce: return "wrong_action_once";
    case FaultMode::kDropResultOnce: return "drop_result_once";
  }
  return "none";
}

std::optional<FaultMode> parse_fault_mode(std::string_view s) {
  if (s == "none") return FaultMode::kNone;
  if (s == "wrong_action_once") return FaultMode::kWrongActionOnce;
  if (s == "drop_result_once") return FaultMode::kDropResultOnce;
  return std::nullopt;
}

std::string resolve_input(const std::string& input_template, const std::vector<ResultInfo>& received,
                          const std::string& fallback) {
  if (input_template.empty()) return fallback;
  std::map<std::string, std::string> b;
  for (const auto& r : received) b[r.info_label] = r.value;
  return text::interpolate(input_template, b);
}

namespace {

std::uint64_t mix(std::uint64_t seed, const std::string& a, const std::string& b) {
  return text::fnv1a(std::to_string(seed) + "|" + a + "|" + b);
}

// First position where the observed keys leave the expected ones, or -1
// when the observed keys are a prefix of the expected ones.
int first_divergence(const std::vector<HistoryTriple>& history, const std::vector<std::string>& expected) {
  for (std::size_t i = 0; i < history.size(); ++i) {
    if (i >= expected.size() || history[i].key != expected[i]) return static_cast<int>(i);
  }
  return -1;
}

std::string describe_step(const std::string& key) {
  if (text::starts_with(key, "click:")) return "tap \"" + key.substr(6) + "\"";
  if (text::starts_with(key, "input:")) return "type \"" + key.substr(6) + "\"";
  if (text::starts_with(key, "swipe:")) return "swipe " + key.substr(6);
  if (key == "back") return "press back";
  return "finish the task";
}

std::string guideline_step(const std::string& key) {
  std::string s = describe_step(key);
  s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

}  // namespace

OracleBackend::OracleBackend(std::shared_ptr<const ScriptDb> scripts, FaultPolicy fault)
    : scripts_(std::move(scripts)), fault_(fault) {}

std::string OracleBackend::config_digest() const {
  return text::hex64(text::fnv1a("oracle|" + std::string(to_string(fault_.mode)) + "|" +
                                 std::to_string(fault_.task_ordinal) + "|" + std::to_string(fault_.step_ordinal) +
                                 "|" + std::to_string(fault_.seed)));
}

const GroundTruth& OracleBackend::truth(const std::string& instruction_id) const {
  const GroundTruth* t = scripts_ ? scripts_->find(instruction_id) : nullptr;
  if (!t) throw BackendError(ErrorKind::kMissingScript, "no ground-truth script for instruction '" + instruction_id + "'");
  return *t;
}

const TaskTruth& OracleBackend::task_truth(const std::string& instruction_id, const std::string& task_id) const {
  const TaskTruth* t = truth(instruction_id).task(task_id);
  if (!t) {
    throw BackendError(ErrorKind::kMissingScript,
                       "no ground-truth script for task '" + task_id + "' of '" + instruction_id + "'");
  }
  return *t;
}

bool OracleBackend::targeted(const std::string& instruction_id, const std::string& task_id) const {
  if (fault_.mode == FaultMode::kNone) return false;
  if (fault_.task_ordinal == 0) return true;
  auto order = topological_order(truth(instruction_id).graph);
  int k = fault_.task_ordinal - 1;
  return k >= 0 && k < static_cast<int>(order.size()) && order[k].task.task_id == task_id;
}

int OracleBackend::fault_step(const std::string& instruction_id, const std::string& task_id) const {
  if (fault_.mode != FaultMode::kWrongActionOnce || !targeted(instruction_id, task_id)) return 0;
  if (fault_.step_ordinal > 0) return fault_.step_ordinal;
  // Position 1 is the runner's launch click; predicted steps are 2..n+1.
  auto n = task_truth(instruction_id, task_id).script.size();
  return 2 + static_cast<int>(mix(fault_.seed, instruction_id, task_id) % n);
}

SchedulingProposal OracleBackend::schedule(const ScheduleQuery& q) {
  const GroundTruth& gt = truth(q.instruction.id);
  SchedulingProposal p;
  p.plan = gt.graph;
  std::vector<std::string> lines;
  for (auto& n : p.plan.nodes) {
    auto ranked = rank_apps(n.task.description, q.expertise);
    n.task.app_id = ranked.empty() ? std::string() : ranked.front().id;
    n.staff_id = n.task.app_id;
    lines.push_back(n.task.task_id + " -> " + (n.task.app_id.empty() ? "?" : n.task.app_id) + ": " +
                    n.task.description);
  }
  for (const auto& e : p.plan.edges) lines.push_back(e.from + " feeds " + e.to + " with " + e.label);
  p.thought = "Decomposed into " + std::to_string(p.plan.nodes.size()) + " tasks. " + text::join(lines, "; ");
  return p;
}

TaskPlan OracleBackend::plan(const PlanQuery& q) {
  TaskPlan p;
  for (const auto& g : q.guidelines) p.sources.push_back(g.entry_id);
  if (!q.guidelines.empty()) p.steps = q.guidelines.front().steps;
  return p;
}

PredictReply OracleBackend::predict(const PredictQuery& q) {
  const TaskTruth& tt = task_truth(q.ctx.instruction_id, q.ctx.task.task_id);
  PredictReply r;
  auto expected = tt.expected_keys();
  std::size_t pos = q.history.size();
  if (tt.app_id != q.ctx.task.app_id || first_divergence(q.history, expected) >= 0 || pos == 0 ||
      pos >= expected.size()) {
    r.thought = pos >= expected.size() ? "All steps are done" : "The procedure cannot continue from here";
    r.action = Action::finish();
    return r;
  }
  const ScriptStep& step = tt.script[pos - 1];

  if (q.ctx.attempt == 1 && fault_step(q.ctx.instruction_id, q.ctx.task.task_id) == static_cast<int>(pos) + 1) {
    std::vector<const Widget*> others, fallback;
    for (const auto& w : q.state.widgets) {
      if (step.type == ActionType::kClick && widget_label(w) == step.target) continue;
      (w.interactive ? others : fallback).push_back(&w);
    }
    if (others.empty()) others = fallback;
    r.thought = "Injected wrong action";
    if (others.empty()) {
      r.action = Action::back();
    } else {
      auto h = mix(fault_.seed, q.ctx.instruction_id, q.ctx.task.task_id + "#" + std::to_string(pos));
      r.action = Action::click(others[h % others.size()]->element_id);
    }
    return r;
  }

  switch (step.type) {
    case ActionType::kClick: {
      const Widget* w = q.state.find_by_label(step.target);
      r.action = w ? Action::click(w->element_id) : Action::finish();
      break;
    }
    case ActionType::kInput:
      r.action = Action::input(resolve_input(tt.input_templates[pos - 1], q.ctx.received_results, step.text));
      break;
    case ActionType::kSwipe: r.action = Action::swipe(step.direction); break;
    case ActionType::kBack: r.action = Action::back(); break;
    case ActionType::kFinish: r.action = Action::finish(); break;
  }
  r.thought = "Next: " + describe_step(step.key());
  return r;
}

StepSummary OracleBackend::summarize(const SummarizeQuery& q) { return compose_summary(q.state, q.action, q.outcome); }

Evaluation OracleBackend::evaluate(const EvaluateQuery& q) {
  const TaskTruth& tt = task_truth(q.instruction_id, q.task.task_id);
  auto expected = tt.expected_keys();
  expected.push_back("finish");
  const auto& h = q.history.triples;
  int d = first_divergence(h, expected);
  if (d >= 0) {
    return {Verdict::kError, "step " + std::to_string(d + 1) + ": expected " + expected[d] + ", observed " + h[d].key};
  }
  if (h.size() < expected.size()) {
    return {Verdict::kError, "stopped after " + std::to_string(h.size()) + " steps; expected " + expected[h.size()] +
                                 " next"};
  }
  return {Verdict::kSuccess, "all " + std::to_string(tt.script.size()) + " steps match the expected procedure"};
}

ReflectionTip OracleBackend::reflect(const ReflectQuery& q) {
  const TaskTruth& tt = task_truth(q.instruction_id, q.task.task_id);
  auto expected = tt.expected_keys();
  expected.push_back("finish");
  const auto& h = q.history.triples;
  std::vector<std::string> diagnosis, suggestion;

  bool acted = false, progressed = false;
  for (std::size_t i = 1; i < h.size(); ++i) {
    if (h[i].action.is_finish()) continue;
    acted = true;
    progressed = progressed || h[i].changed;
  }
  if (acted && !progressed) {
    diagnosis.push_back("no step after the launch changed the app state");
    suggestion.push_back("Re-launch the app from the home screen and start over");
  }
  int d = first_divergence(h, expected);
  if (d >= 0) {
    diagnosis.push_back("step " + std::to_string(d + 1) + " did " + h[d].key + " instead of " + expected[d]);
    const std::string& want = expected[d];
    if (text::starts_with(want, "click:")) {
      suggestion.push_back("At step " + std::to_string(d + 1) + " tap \"" + want.substr(6) + "\"");
    } else {
      suggestion.push_back("At step " + std::to_string(d + 1) + " " + describe_step(want));
    }
  }
  if (q.history.terminated_by == Termination::kStepBudget) {
    diagnosis.push_back("the step budget ran out after " + std::to_string(h.size()) + " steps");
    suggestion.push_back("Skip detours so the task fits the step budget");
  }
  if (diagnosis.empty()) {
    diagnosis.push_back(q.evaluation.rationale);
    suggestion.push_back("Follow the expected procedure from the app's first screen");
  }
  return {text::join(diagnosis, "; "), text::join(suggestion, "; ")};
}

ExtractedExperience OracleBackend::extract(const ExtractQuery& q) {
  const TaskTruth& tt = task_truth(q.instruction_id, q.task.task_id);
  ExtractedExperience x;
  bool drop = fault_.mode == FaultMode::kDropResultOnce && q.attempt == 1 && targeted(q.instruction_id, q.task.task_id);
  if (!drop) {
    for (const auto& label : q.outbound_labels) {
      auto it = tt.results.find(label);
      if (it == tt.results.end()) continue;
      std::string want = text::lower(it->second);
      bool seen = std::any_of(q.history.triples.begin(), q.history.triples.end(), [&](const HistoryTriple& t) {
        return std::any_of(t.state.widgets.begin(), t.state.widgets.end(),
                           [&](const Widget& w) { return text::lower(w.text).find(want) != std::string::npos; });
      });
      if (seen) x.results.push_back({q.task.task_id, label, it->second});
    }
  }
  x.expertise = {q.task.app_id, tt.capability};
  x.guideline.app_id = q.task.app_id;
  for (std::size_t i = 1; i < q.history.triples.size(); ++i) {
    const auto& t = q.history.triples[i];
    if (!t.action.is_finish()) x.guideline.steps.push_back(guideline_step(t.key));
  }
  return x;
}

std::string OracleBackend::adjust(const AdjustQuery& q) {
  return text::interpolate(q.downstream.description, {{q.result.info_label, q.result.value}});
}

ExpertiseVerdict OracleBackend::expertise_decision(const ExpertiseQuery& q) {
  for (const auto& have : q.current.expertise) {
    if (text::iequals(text::trim(have), text::trim(q.candidate.capability))) return {false, "duplicate"};
  }
  return {true, "novel"};
}

}  // namespace steward
