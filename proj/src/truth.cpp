#include "steward/truth.hpp"

#include <nlohmann/json.hpp>

#include "steward/error.hpp"

namespace steward {

using nlohmann::json;

std::vector<std::string> TaskTruth::expected_keys() const {
  std::vector<std::string> keys{"click:" + app_name};
  for (const auto& s : script) keys.push_back(s.key());
  return keys;
}

const TaskTruth* GroundTruth::task(const std::string& task_id) const {
  for (const auto& t : tasks) {
    if (t.task_id == task_id) return &t;
  }
  return nullptr;
}

const TaskTruth* GroundTruth::task_for_app(const std::string& app_id) const {
  for (const auto& t : tasks) {
    if (t.app_id == app_id) return &t;
  }
  return nullptr;
}

ScriptDb::ScriptDb(const std::vector<GeneratedInstruction>& suite) {
  for (const auto& g : suite) add(g.instruction.id, g.truth);
}

void ScriptDb::add(const std::string& instruction_id, GroundTruth truth) {
  truths_[instruction_id] = std::move(truth);
}

const GroundTruth* ScriptDb::find(const std::string& instruction_id) const {
  auto it = truths_.find(instruction_id);
  return it == truths_.end() ? nullptr : &it->second;
}

void to_json(json& j, const ScriptStep& v) {
  j = json{{"type", to_string(v.type)}};
  switch (v.type) {
    case ActionType::kClick:
      j["element_id"] = v.element_id;
      j["target"] = v.target;
      break;
    case ActionType::kInput: j["text"] = v.text; break;
    case ActionType::kSwipe: j["direction"] = to_string(v.direction); break;
    default: break;
  }
}

void from_json(const json& j, ScriptStep& v) {
  std::string type = j.at("type").get<std::string>();
  v = ScriptStep{};
  if (type == "click") {
    v.type = ActionType::kClick;
    v.element_id = j.at("element_id").get<int>();
    v.target = j.at("target").get<std::string>();
  } else if (type == "input") {
    v.type = ActionType::kInput;
    v.text = j.at("text").get<std::string>();
  } else if (type == "swipe") {
    v.type = ActionType::kSwipe;
    auto d = parse_direction(j.at("direction").get<std::string>());
    if (!d) throw Error(ErrorKind::kConfig, "bad swipe direction in script step");
    v.direction = *d;
  } else if (type == "back") {
    v.type = ActionType::kBack;
  } else if (type == "finish") {
    v.type = ActionType::kFinish;
  } else {
    throw Error(ErrorKind::kConfig, "unknown script step type '" + type + "'");
  }
}

void to_json(json& j, const TaskTruth& v) {
  j = json{{"task_id", v.task_id},
           {"app_id", v.app_id},
           {"app_name", v.app_name},
           {"template", v.template_id},
           {"capability", v.capability},
           {"script", v.script},
           {"input_templates", v.input_templates},
           {"results", v.results},
           {"goal", {{"predicate", v.goal.predicate}, {"args", v.goal.args}}}};
}

void from_json(const json& j, TaskTruth& v) {
  v.task_id = j.at("task_id").get<std::string>();
  v.app_id = j.at("app_id").get<std::string>();
  v.app_name = j.at("app_name").get<std::string>();
  v.template_id = j.value("template", "");
  v.capability = j.value("capability", "");
  v.script = j.at("script").get<std::vector<ScriptStep>>();
  v.input_templates = j.value("input_templates", std::vector<std::string>(v.script.size()));
  if (v.input_templates.size() != v.script.size()) {
    throw Error(ErrorKind::kConfig, "task " + v.task_id + ": input_templates not aligned with script");
  }
  v.results = j.value("results", std::map<std::string, std::string>{});
  v.goal.predicate = j.at("goal").at("predicate").get<std::string>();
  v.goal.args = j.at("goal").at("args").get<std::vector<std::string>>();
}

void to_json(json& j, const GroundTruth& v) { j = json{{"graph", v.graph}, {"tasks", v.tasks}}; }

void from_json(const json& j, GroundTruth& v) {
  v.graph = j.at("graph").get<SchedulingGraph>();
  v.tasks = j.at("tasks").get<std::vector<TaskTruth>>();
}

}  // namespace steward
