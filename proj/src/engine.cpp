#include "steward/engine.hpp"

#include <algorithm>
#include <chrono>

#include <nlohmann/json.hpp>

#include "steward/error.hpp"
#include "steward/evaluation.hpp"
#include "steward/execution.hpp"
#include "steward/layout.hpp"
#include "steward/recruitment.hpp"
#include "steward/text.hpp"

namespace steward {

using nlohmann::json;

void RunConfig::validate() const {
  if (n_try < 1) throw Error(ErrorKind::kConfig, "n_try must be at least 1");
  if (n_step < 1) throw Error(ErrorKind::kConfig, "n_step must be at least 1");
}

void to_json(json& j, const RunReport& r) {
  json tasks = json::array();
  for (const auto& t : r.tasks) {
    json log = json::array();
    for (const auto& a : t.log) {
      log.push_back({{"attempt", a.attempt}, {"keys", a.keys}, {"verdict", to_string(a.verdict)},
                     {"rationale", a.rationale}});
    }
    tasks.push_back({{"task_id", t.task_id},
                     {"app_id", t.app_id},
                     {"description", t.description},
                     {"attempts", t.attempts},
                     {"final_verdict", to_string(t.final_verdict)},
                     {"skipped", t.skipped},
                     {"log", log}});
  }
  j = json{{"instruction_id", r.instruction_id}, {"tasks", tasks},   {"apps_touched", r.apps_touched},
           {"total_actions", r.total_actions},   {"tokens", r.tokens}, {"success", r.success},
           {"error", r.error},                   {"goals_met", r.goals_met}};
}

void from_json(const json& j, RunReport& r) {
  auto verdict = [](const json& v) { return v.get<std::string>() == "SUCCESS" ? Verdict::kSuccess : Verdict::kError; };
  r = RunReport{};
  r.instruction_id = j.at("instruction_id").get<std::string>();
  for (const auto& t : j.at("tasks")) {
    TaskOutcome o;
    o.task_id = t.at("task_id").get<std::string>();
    o.app_id = t.at("app_id").get<std::string>();
    o.description = t.value("description", "");
    o.attempts = t.at("attempts").get<int>();
    o.final_verdict = verdict(t.at("final_verdict"));
    o.skipped = t.value("skipped", false);
    for (const auto& a : t.value("log", json::array())) {
      o.log.push_back({a.at("attempt").get<int>(), a.at("keys").get<std::vector<std::string>>(),
                       verdict(a.at("verdict")), a.value("rationale", "")});
    }
    r.tasks.push_back(std::move(o));
  }
  r.apps_touched = j.value("apps_touched", std::vector<std::string>{});
  r.total_actions = j.value("total_actions", 0);
  r.tokens = j.value("tokens", 0L);
  r.success = j.value("success", false);
  r.error = j.value("error", "");
  r.goals_met = j.value("goals_met", std::vector<bool>{});
}

namespace {

class Recorder {
 public:
  Recorder(TraceWriter* trace, AgentBackend& backend, bool verbose)
      : trace_(trace), backend_(backend), verbose_(verbose) {}

  void write(const std::string& kind, const json& fields) {
    flush_exchanges();
    if (trace_) trace_->write(kind, fields);
  }

  void flush_exchanges() {
    auto ex = backend_.drain_exchanges();
    if (!trace_ || !verbose_) return;
    for (const auto& e : ex) {
      trace_->write("backend_exchange", {{"query", e.kind}, {"request", e.request}, {"response", e.response}});
    }
  }

 private:
  TraceWriter* trace_;
  AgentBackend& backend_;
  bool verbose_;
};

json history_digest(const ExecutionHistory& h) {
  return {{"steps", h.triples.size()}, {"terminated_by", to_string(h.terminated_by)}, {"error_note", h.error_note}};
}

}  // namespace

RunReport run_instruction(const Instruction& instr, DeviceEnv& env, const RunConfig& cfg, MemoryStore& memory,
                          AgentBackend& backend, TraceWriter* trace, const GoalProbe& probe) {
  cfg.validate();
  auto started = std::chrono::steady_clock::now();
  if (trace) trace->set_run(instr.id);
  Recorder rec(trace, backend, cfg.verbose);
  long tokens_before = backend.usage().total();

  RunReport report;
  report.instruction_id = instr.id;
  auto finish = [&]() {
    if (probe) report.goals_met = probe(env);
    report.tokens = backend.usage().total() - tokens_before;
    report.success = !report.tasks.empty() && std::all_of(report.tasks.begin(), report.tasks.end(), [](const auto& t) {
      return t.final_verdict == Verdict::kSuccess;
    });
    rec.write("report", report);
    report.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
    return report;
  };

  SchedulingProposal proposal;
  std::vector<GraphNode> order;
  try {
    proposal = schedule(instr, memory.expertise(), backend, env.registry().app_ids());
    order = topological_order(proposal.plan);
  } catch (const Error& e) {
    report.error = std::string(to_string(e.kind())) + ": " + e.what();
    rec.write("schedule", {{"instruction", instr},
                           {"backend", backend.name()},
                           {"backend_digest", backend.config_digest()},
                           {"error", report.error}});
    return finish();
  }
  const SchedulingGraph& sg = proposal.plan;
  rec.write("schedule", {{"instruction", instr},
                         {"backend", backend.name()},
                         {"backend_digest", backend.config_digest()},
                         {"thought", proposal.thought},
                         {"graph", sg},
                         {"order", [&] {
                            std::vector<std::string> ids;
                            for (const auto& n : order) ids.push_back(n.task.task_id);
                            return ids;
                          }()}});

  TaskTable pending;
  for (const auto& n : sg.nodes) pending[n.task.task_id] = PendingTask{n.task, {}, {}};

  for (const auto& node : order) {
    PendingTask& slot = pending.at(node.task.task_id);
    TaskOutcome outcome;
    outcome.task_id = node.task.task_id;
    outcome.app_id = node.task.app_id;
    outcome.description = slot.task.description;
    if (!slot.task.placeholders.empty()) {
      outcome.skipped = true;
      rec.write("evaluation", {{"task_id", outcome.task_id},
                               {"attempt", 0},
                               {"verdict", "ERROR"},
                               {"rationale", "skipped: unbound placeholders " + text::join(slot.task.placeholders, ", ")}});
      report.tasks.push_back(std::move(outcome));
      continue;
    }

    StaffContext ctx;
    ctx.task = slot.task;
    ctx.instruction_id = instr.id;
    ctx.received_results = slot.received;
    ctx.plan = plan_task(ctx.task, instr.id, memory, backend);

    for (int attempt = 1; attempt <= cfg.n_try; ++attempt) {
      ctx.attempt = attempt;
      ctx.last_summary.reset();
      if (attempt == 1) ctx.reflection_tip.reset();
      bool home_pressed = env.go_home();
      json start{{"task_id", ctx.task.task_id}, {"app_id", ctx.task.app_id},       {"attempt", attempt},
                 {"description", ctx.task.description}, {"home_pressed", home_pressed},
                 {"received", ctx.received_results},     {"plan", {{"steps", ctx.plan.steps}, {"sources", ctx.plan.sources}}}};
      if (ctx.reflection_tip) start["reflection_tip"] = *ctx.reflection_tip;
      rec.write("attempt_start", start);

      auto observer = [&](const HistoryTriple& t, std::size_t index) {
        auto& apps = report.apps_touched;
        if (!env.at_home() && std::find(apps.begin(), apps.end(), env.foreground()) == apps.end()) {
          apps.push_back(env.foreground());
        }
        ++report.total_actions;
        rec.write("step", {{"task_id", ctx.task.task_id},
                           {"attempt", attempt},
                           {"index", index + 1},
                           {"layout_digest", layout_digest(t.state)},
                           {"screen", t.state.app_id + "/" + t.state.screen_id},
                           {"action", t.action.to_string()},
                           {"key", t.key},
                           {"changed", t.changed},
                           {"error", to_string(t.error)},
                           {"note", t.note},
                           {"summary", t.summary}});
      };
      ExecutionHistory h = run_assigned_task(ctx, env, backend, cfg.n_step, observer);

      AttemptLog log;
      log.attempt = attempt;
      for (const auto& t : h.triples) log.keys.push_back(t.key);
      Evaluation ev;
      try {
        ev = evaluate(h, ctx.task, instr.id, backend);
      } catch (const BackendError& e) {
        ev = {Verdict::kError, std::string("evaluation failed: ") + e.what()};
      }
      std::vector<std::string> labels;
      for (const auto* e : sg.outbound(ctx.task.task_id)) {
        if (std::find(labels.begin(), labels.end(), e->label) == labels.end()) labels.push_back(e->label);
      }
      ExtractedExperience x;
      std::string downgraded;
      if (ev.verdict == Verdict::kSuccess) {
        try {
          x = extract(h, ctx.task, instr.id, labels, attempt, backend);
        } catch (const Error& e) {
          downgraded = e.what();
          ev = {Verdict::kError, std::string(to_string(e.kind())) + ": " + e.what()};
        }
      }
      json evrec{{"task_id", ctx.task.task_id}, {"attempt", attempt}, {"verdict", to_string(ev.verdict)},
                 {"rationale", ev.rationale}, {"history", history_digest(h)}};
      if (!downgraded.empty()) evrec["downgraded_from"] = "SUCCESS";
      rec.write("evaluation", evrec);
      log.verdict = ev.verdict;
      log.rationale = ev.rationale;
      outcome.log.push_back(std::move(log));
      outcome.attempts = attempt;
      outcome.description = ctx.task.description;

      if (ev.verdict == Verdict::kError) {
        ReflectionTip tip = reflect(h, ctx.task, instr.id, ev, backend);
        rec.write("reflection", {{"task_id", ctx.task.task_id}, {"attempt", attempt}, {"tip", tip}});
        ctx.reflection_tip = tip;
        continue;
      }

      outcome.final_verdict = Verdict::kSuccess;
      rec.write("extraction", {{"task_id", ctx.task.task_id},
                               {"attempt", attempt},
                               {"results", x.results},
                               {"expertise", x.expertise.capability},
                               {"guideline", x.guideline.steps}});
      for (const auto& d : deliver_results(sg, ctx.task.task_id, x.results, pending, backend)) {
        rec.write("delivery", {{"from", d.edge.from}, {"to", d.edge.to}, {"label", d.edge.label}, {"value", d.result.value}});
        if (d.adjusted) {
          rec.write("adjust", {{"task_id", d.after.task_id}, {"before", d.before.description},
                               {"after", d.after.description}, {"remaining", d.after.placeholders}});
        }
      }
      if (cfg.update_memory) {
        json mu{{"task_id", ctx.task.task_id}, {"app_id", ctx.task.app_id}};
        if (!x.expertise.capability.empty()) {
          UpdateDecision dec;
          try {
            dec = memory.update_expertise(x.expertise, backend);
          } catch (const BackendError&) {
            dec = memory.add_expertise(x.expertise);
          }
          mu["expertise"] = {{"capability", x.expertise.capability}, {"applied", dec.applied}, {"reason", dec.reason}};
        }
        if (!x.guideline.steps.empty()) mu["guideline_id"] = memory.update_guidelines(ctx.task.description, x.guideline);
        rec.write("memory_update", mu);
      }
      break;
    }
    report.tasks.push_back(std::move(outcome));
  }
  return finish();
}

}  // namespace steward
