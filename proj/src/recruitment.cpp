#include "steward/recruitment.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "steward/error.hpp"
#include "steward/text.hpp"

namespace steward {

std::string_view to_string(ViolationKind k) {
  switch (k) {
    case ViolationKind::kEmptyGraph: return "EmptyGraph";
    case ViolationKind::kDuplicateTask: return "DuplicateTask";
    case ViolationKind::kUnknownApp: return "UnknownApp";
    case ViolationKind::kStaffMismatch: return "StaffMismatch";
    case ViolationKind::kDanglingEdge: return "DanglingEdge";
    case ViolationKind::kCycleDetected: return "CycleDetected";
    case ViolationKind::kUnboundPlaceholder: return "UnboundPlaceholder";
    case ViolationKind::kAmbiguousPlaceholder: return "AmbiguousPlaceholder";
  }
  return "?";
}

namespace {

// Kahn's algorithm; returns the ordered ids and leaves unreleased ids out.
std::vector<std::string> kahn(const SchedulingGraph& sg) {
  std::map<std::string, int> indeg;
  std::map<std::string, std::vector<std::string>> succ;
  for (const auto& n : sg.nodes) indeg.emplace(n.task.task_id, 0);
  for (const auto& e : sg.edges) {
    if (!indeg.count(e.from) || !indeg.count(e.to)) continue;
    ++indeg[e.to];
    succ[e.from].push_back(e.to);
  }
  std::set<std::string> ready;
  for (const auto& [id, d] : indeg) {
    if (d == 0) ready.insert(id);
  }
  std::vector<std::string> order;
  while (!ready.empty()) {
    std::string id = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(id);
    for (const auto& s : succ[id]) {
      if (--indeg[s] == 0) ready.insert(s);
    }
  }
  return order;
}

}  // namespace

std::vector<Violation> validate_graph(const SchedulingGraph& sg, const std::vector<std::string>& app_ids) {
  std::vector<Violation> out;
  if (sg.nodes.empty()) out.push_back({ViolationKind::kEmptyGraph, "", "graph has no tasks"});
  std::set<std::string> ids;
  for (const auto& n : sg.nodes) {
    const auto& t = n.task;
    if (!ids.insert(t.task_id).second) {
      out.push_back({ViolationKind::kDuplicateTask, t.task_id, "task id used more than once"});
    }
    if (std::find(app_ids.begin(), app_ids.end(), t.app_id) == app_ids.end()) {
      out.push_back({ViolationKind::kUnknownApp, t.task_id, "app '" + t.app_id + "' is not installed"});
    }
    if (n.staff_id != t.app_id) {
      out.push_back({ViolationKind::kStaffMismatch, t.task_id,
                     "staff '" + n.staff_id + "' does not serve app '" + t.app_id + "'"});
    }
  }
  for (const auto& e : sg.edges) {
    if (!ids.count(e.from) || !ids.count(e.to)) {
      out.push_back({ViolationKind::kDanglingEdge, e.from + "->" + e.to, "edge endpoint is not a task"});
    }
  }
  if (kahn(sg).size() < ids.size()) {
    out.push_back({ViolationKind::kCycleDetected, "", "information flow contains a cycle"});
  }
  for (const auto& n : sg.nodes) {
    const auto& t = n.task;
    std::map<std::string, int> cover;
    for (const auto* e : sg.inbound(t.task_id)) ++cover[e->label];
    for (const auto& p : t.placeholders) {
      int c = cover.count(p) ? cover[p] : 0;
      if (c == 0) {
        out.push_back({ViolationKind::kUnboundPlaceholder, t.task_id, "placeholder {" + p + "} has no inbound edge"});
      } else if (c > 1) {
        out.push_back({ViolationKind::kAmbiguousPlaceholder, t.task_id,
                       "placeholder {" + p + "} is fed by " + std::to_string(c) + " edges"});
      }
    }
  }
  return out;
}

std::vector<GraphNode> topological_order(const SchedulingGraph& sg) {
  auto ids = kahn(sg);
  std::set<std::string> distinct;
  for (const auto& n : sg.nodes) distinct.insert(n.task.task_id);
  if (ids.size() < distinct.size()) throw Error(ErrorKind::kCycle, "scheduling graph contains a cycle");
  std::vector<GraphNode> out;
  for (const auto& id : ids) out.push_back(*sg.node(id));
  return out;
}

namespace {

std::vector<std::string> describe(const std::vector<Violation>& vs) {
  std::vector<std::string> out;
  for (const auto& v : vs) {
    out.push_back(std::string(to_string(v.kind)) + (v.subject.empty() ? "" : " [" + v.subject + "]") + ": " +
                  v.message);
  }
  return out;
}

bool only_unknown_apps(const SchedulingGraph& sg, const std::vector<std::string>& app_ids) {
  return std::none_of(sg.nodes.begin(), sg.nodes.end(), [&](const GraphNode& n) {
    return std::find(app_ids.begin(), app_ids.end(), n.task.app_id) != app_ids.end();
  });
}

}  // namespace

SchedulingProposal schedule(const Instruction& instr, const std::vector<ExpertiseEntry>& expertise,
                            AgentBackend& backend, const std::vector<std::string>& app_ids) {
  ScheduleQuery q{instr, expertise, {}};
  SchedulingProposal p = backend.schedule(q);
  auto violations = validate_graph(p.plan, app_ids);
  if (violations.empty()) return p;
  q.correction = describe(violations);
  p = backend.schedule(q);
  violations = validate_graph(p.plan, app_ids);
  if (violations.empty()) return p;
  if (only_unknown_apps(p.plan, app_ids)) {
    throw Error(ErrorKind::kUnschedulableInstruction,
                "instruction " + instr.id + ": no task maps to an installed app");
  }
  throw Error(ErrorKind::kInvalidGraph,
              "instruction " + instr.id + ": " + text::join(describe(violations), "; "));
}

}  // namespace steward
