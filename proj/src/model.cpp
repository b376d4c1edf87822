#include "steward/model.hpp"

#include <nlohmann/json.hpp>

#include "steward/text.hpp"

namespace steward {

using nlohmann::json;

std::vector<std::string> placeholders_in(const std::string& description) {
  return text::slot_names(description);
}

const GraphNode* SchedulingGraph::node(const std::string& task_id) const {
  for (const auto& n : nodes) {
    if (n.task.task_id == task_id) return &n;
  }
  return nullptr;
}

std::vector<const GraphEdge*> SchedulingGraph::outbound(const std::string& task_id) const {
  std::vector<const GraphEdge*> out;
  for (const auto& e : edges) {
    if (e.from == task_id) out.push_back(&e);
  }
  return out;
}

std::vector<const GraphEdge*> SchedulingGraph::inbound(const std::string& task_id) const {
  std::vector<const GraphEdge*> out;
  for (const auto& e : edges) {
    if (e.to == task_id) out.push_back(&e);
  }
  return out;
}

std::string_view to_string(Termination t) {
  return t == Termination::kFinish ? "finish" : "step_budget";
}

std::string_view to_string(Verdict v) { return v == Verdict::kSuccess ? "SUCCESS" : "ERROR"; }

void to_json(json& j, const Instruction& v) {
  j = json{{"id", v.id}, {"text", v.text}, {"labeled_apps", v.labeled_apps}, {"complexity", v.complexity}};
}

void from_json(const json& j, Instruction& v) {
  v.id = j.at("id").get<std::string>();
  v.text = j.at("text").get<std::string>();
  v.labeled_apps = j.value("labeled_apps", std::vector<std::string>{});
  v.complexity = j.value("complexity", static_cast<int>(v.labeled_apps.size()));
}

void to_json(json& j, const Task& v) {
  j = json{{"task_id", v.task_id}, {"app_id", v.app_id}, {"description", v.description},
           {"placeholders", v.placeholders}};
}

void from_json(const json& j, Task& v) {
  v.task_id = j.at("task_id").get<std::string>();
  v.app_id = j.at("app_id").get<std::string>();
  v.description = j.at("description").get<std::string>();
  if (j.contains("placeholders")) {
    v.placeholders = j.at("placeholders").get<std::vector<std::string>>();
  } else {
    v.placeholders = placeholders_in(v.description);
  }
}

void to_json(json& j, const SchedulingGraph& v) {
  json nodes = json::array();
  for (const auto& n : v.nodes) {
    json t = n.task;
    t["staff_id"] = n.staff_id;
    nodes.push_back(std::move(t));
  }
  json edges = json::array();
  for (const auto& e : v.edges) edges.push_back({{"from", e.from}, {"to", e.to}, {"label", e.label}});
  j = json{{"nodes", nodes}, {"edges", edges}};
}

void from_json(const json& j, SchedulingGraph& v) {
  v.nodes.clear();
  v.edges.clear();
  for (const auto& n : j.at("nodes")) {
    GraphNode node;
    node.task = n.get<Task>();
    node.staff_id = n.value("staff_id", node.task.app_id);
    v.nodes.push_back(std::move(node));
  }
  for (const auto& e : j.at("edges")) {
    v.edges.push_back({e.at("from").get<std::string>(), e.at("to").get<std::string>(),
                       e.at("label").get<std::string>()});
  }
}

void to_json(json& j, const StepSummary& v) {
  j = json{{"action_recap", v.action_recap}, {"result", v.result}, {"element_note", v.element_note}};
}

void to_json(json& j, const ResultInfo& v) {
  j = json{{"from_task_id", v.from_task_id}, {"info_label", v.info_label}, {"value", v.value}};
}

void from_json(const json& j, ResultInfo& v) {
  v.from_task_id = j.at("from_task_id").get<std::string>();
  v.info_label = j.at("info_label").get<std::string>();
  v.value = j.at("value").get<std::string>();
}

void to_json(json& j, const ReflectionTip& v) {
  j = json{{"diagnosis", v.diagnosis}, {"suggestion", v.suggestion}};
}

void to_json(json& j, const ExpertiseEntry& v) {
  j = json{{"app_id", v.app_id}, {"description", v.description}, {"expertise", v.expertise}};
}

void from_json(const json& j, ExpertiseEntry& v) {
  v.app_id = j.at("app_id").get<std::string>();
  v.description = j.value("description", "");
  v.expertise = j.value("expertise", std::vector<std::string>{});
}

void to_json(json& j, const GuidelineEntry& v) {
  j = json{{"entry_id", v.entry_id}, {"app_id", v.app_id}, {"task_text", v.task_text}, {"steps", v.steps}};
}

void from_json(const json& j, GuidelineEntry& v) {
  v.entry_id = j.at("entry_id").get<std::string>();
  v.app_id = j.at("app_id").get<std::string>();
  v.task_text = j.at("task_text").get<std::string>();
  v.steps = j.at("steps").get<std::vector<std::string>>();
}

void to_json(json& j, const ScreenState& v) {
  json widgets = json::array();
  for (const auto& w : v.widgets) {
    widgets.push_back({{"id", w.element_id}, {"kind", to_string(w.kind)}, {"text", w.text},
                       {"interactive", w.interactive}});
  }
  j = json{{"app_id", v.app_id}, {"screen_id", v.screen_id}, {"scroll", v.scroll_offset}, {"widgets", widgets}};
}

}  // namespace steward
