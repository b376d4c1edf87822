#include "steward/evaluation.hpp"

#include <algorithm>

#include "steward/error.hpp"
#include "steward/text.hpp"

namespace steward {

Evaluation evaluate(const ExecutionHistory& history, const Task& task, const std::string& instruction_id,
                    AgentBackend& backend) {
  if (history.triples.empty()) return {Verdict::kError, "no steps were executed"};
  Evaluation e = backend.evaluate({task, instruction_id, history});
  if (history.terminated_by == Termination::kStepBudget) {
    std::string why = history.error_note.empty()
                          ? "step budget exhausted after " + std::to_string(history.triples.size()) + " steps"
                          : history.error_note;
    if (e.verdict == Verdict::kSuccess || text::trim(e.rationale).empty()) {
      e.rationale = why;
    } else {
      e.rationale = why + "; " + e.rationale;
    }
    e.verdict = Verdict::kError;
  }
  if (text::trim(e.rationale).empty()) {
    e.rationale = e.verdict == Verdict::kSuccess ? "task completed" : "task not completed";
  }
  return e;
}

ReflectionTip reflect(const ExecutionHistory& history, const Task& task, const std::string& instruction_id,
                      const Evaluation& evaluation, AgentBackend& backend) {
  ReflectionTip t;
  try {
    t = backend.reflect({task, instruction_id, history, evaluation});
  } catch (const BackendError& e) {
    t.diagnosis = std::string("reflection unavailable: ") + e.what();
  }
  if (text::trim(t.diagnosis).empty()) t.diagnosis = evaluation.rationale;
  if (text::trim(t.suggestion).empty()) t.suggestion = "Restart the task from the app's first screen";
  return t;
}

namespace {

std::vector<std::string> abstract_steps(const ExecutionHistory& history) {
  std::vector<std::string> steps;
  for (std::size_t i = 1; i < history.triples.size(); ++i) {
    const auto& t = history.triples[i];
    if (t.action.is_finish()) continue;
    steps.push_back(t.key);
  }
  return steps;
}

}  // namespace

ExtractedExperience extract(const ExecutionHistory& history, const Task& task, const std::string& instruction_id,
                            const std::vector<std::string>& outbound_labels, int attempt, AgentBackend& backend) {
  ExtractedExperience x = backend.extract({task, instruction_id, history, outbound_labels, attempt});
  std::vector<ResultInfo> results;
  for (const auto& label : outbound_labels) {
    auto it = std::find_if(x.results.begin(), x.results.end(), [&](const ResultInfo& r) {
      return r.info_label == label && !text::trim(r.value).empty();
    });
    if (it == x.results.end()) {
      throw Error(ErrorKind::kMissingResult, "task " + task.task_id + ": no value recovered for '" + label + "'");
    }
    if (std::none_of(results.begin(), results.end(), [&](const ResultInfo& r) { return r.info_label == label; })) {
      results.push_back({task.task_id, label, text::trim(it->value)});
    }
  }
  x.results = std::move(results);
  x.expertise.app_id = task.app_id;
  x.guideline.app_id = task.app_id;
  if (x.guideline.steps.empty()) x.guideline.steps = abstract_steps(history);
  if (x.guideline.steps.size() > history.triples.size()) x.guideline.steps.resize(history.triples.size());
  return x;
}

Task adjust(const Task& downstream, const ResultInfo& result, AgentBackend& backend) {
  const std::string& label = result.info_label;
  if (std::find(downstream.placeholders.begin(), downstream.placeholders.end(), label) ==
      downstream.placeholders.end()) {
    throw Error(ErrorKind::kLabelMismatch,
                "task " + downstream.task_id + " has no unbound placeholder '" + label + "'");
  }
  std::string token = "{" + label + "}";
  std::string mechanical = downstream.description;
  std::string prefix, suffix;
  if (auto pos = mechanical.find(token); pos != std::string::npos) {
    prefix = mechanical.substr(0, pos);
    suffix = mechanical.substr(pos + token.size());
  }
  mechanical = text::interpolate(mechanical, {{label, result.value}});

  std::string rewritten;
  try {
    rewritten = backend.adjust({downstream, result});
  } catch (const BackendError&) {
    rewritten.clear();
  }
  // A rewrite is accepted only if it keeps the surrounding text, keeps the
  // value, and leaves the other placeholders alone.
  bool ok = !rewritten.empty() && text::starts_with(rewritten, prefix) &&
            rewritten.size() >= prefix.size() + suffix.size() &&
            rewritten.compare(rewritten.size() - suffix.size(), suffix.size(), suffix) == 0 &&
            rewritten.find(result.value) != std::string::npos &&
            text::slot_names(rewritten) == text::slot_names(mechanical);
  Task out = downstream;
  out.description = ok ? rewritten : mechanical;
  out.placeholders.erase(std::remove(out.placeholders.begin(), out.placeholders.end(), label),
                         out.placeholders.end());
  return out;
}

std::vector<Delivery> deliver_results(const SchedulingGraph& sg, const std::string& from_task_id,
                                      const std::vector<ResultInfo>& results, TaskTable& pending,
                                      AgentBackend& backend) {
  std::vector<Delivery> out;
  for (const auto* e : sg.outbound(from_task_id)) {
    auto r = std::find_if(results.begin(), results.end(), [&](const ResultInfo& x) { return x.info_label == e->label; });
    auto p = pending.find(e->to);
    if (r == results.end() || p == pending.end()) continue;
    Delivery d;
    d.edge = *e;
    d.result = *r;
    d.before = p->second.task;
    p->second.received.push_back(*r);
    const auto& ph = p->second.task.placeholders;
    if (std::find(ph.begin(), ph.end(), e->label) != ph.end()) {
      p->second.revisions.push_back(p->second.task);
      p->second.task = adjust(p->second.task, *r, backend);
      d.adjusted = true;
    }
    d.after = p->second.task;
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace steward
