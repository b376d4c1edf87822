#include "steward/app.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <set>

#include <nlohmann/json.hpp>

#include "steward/device.hpp"
#include "steward/error.hpp"
#include "steward/text.hpp"

#ifndef STEWARD_DATA_DIR
#define STEWARD_DATA_DIR "data"
#endif

namespace steward {

using nlohmann::json;

const WidgetDef* ScreenDef::widget(std::string_view key) const {
  for (const auto& w : widgets) {
    if (w.key == key) return &w;
  }
  return nullptr;
}

int ScreenDef::max_page() const {
  int m = 0;
  for (const auto& w : widgets) m = std::max(m, w.page);
  return m;
}

bool SlotDef::accepts_type(std::string_view type) const {
  return std::find(accepts.begin(), accepts.end(), type) != accepts.end() ||
         std::find(accepts.begin(), accepts.end(), "any") != accepts.end();
}

const SlotDef* TaskTemplate::slot(std::string_view name) const {
  for (const auto& s : slots) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

const ScreenDef* MockApp::screen(std::string_view id) const {
  for (const auto& s : screens) {
    if (s.id == id) return &s;
  }
  return nullptr;
}

const PredicateDef* MockApp::predicate(std::string_view name) const {
  for (const auto& p : predicates) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

const TaskTemplate* MockApp::task_template(std::string_view id) const {
  for (const auto& t : templates) {
    if (t.id == id) return &t;
  }
  return nullptr;
}

const Transition* MockApp::click_transition(std::string_view screen, std::string_view key) const {
  for (const auto& t : transitions) {
    if (t.screen == screen && !t.click.empty() && t.click == key) return &t;
  }
  return nullptr;
}

const Transition* MockApp::swipe_transition(std::string_view screen, SwipeDirection d) const {
  for (const auto& t : transitions) {
    if (t.screen == screen && t.swipe && *t.swipe == d) return &t;
  }
  return nullptr;
}

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw Error(ErrorKind::kRegistry, where + ": " + what);
}

std::string str(const json& j, const char* key, const std::string& def = "") {
  auto it = j.find(key);
  if (it == j.end()) return def;
  return it->get<std::string>();
}

std::vector<std::string> str_list(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) return {};
  return it->get<std::vector<std::string>>();
}

Condition parse_condition(const json& j, const std::string& where) {
  Condition c;
  c.normalize = str(j, "normalize");
  if (j.contains("list")) {
    c.kind = Condition::Kind::kListContains;
    c.name = j.at("list").get<std::string>();
    c.value = str(j, "contains");
  } else if (j.contains("var")) {
    c.name = j.at("var").get<std::string>();
    if (j.contains("equals")) {
      c.kind = Condition::Kind::kVarEquals;
      c.value = j.at("equals").get<std::string>();
    } else if (j.value("nonempty", false)) {
      c.kind = Condition::Kind::kVarNonEmpty;
    } else {
      fail(where, "condition on var needs 'equals' or 'nonempty'");
    }
  } else {
    fail(where, "condition needs 'var' or 'list'");
  }
  return c;
}

std::vector<Condition> parse_conditions(const json& j, const char* key, const std::string& where) {
  std::vector<Condition> out;
  if (auto it = j.find(key); it != j.end()) {
    for (const auto& c : *it) out.push_back(parse_condition(c, where));
  }
  return out;
}

Effect parse_effect(const json& j, const std::string& where) {
  Effect e;
  e.normalize = str(j, "normalize");
  if (j.contains("set")) {
    e.kind = Effect::Kind::kSet;
    e.target = j.at("set").get<std::string>();
    e.value = str(j, "to");
  } else if (j.contains("append")) {
    e.kind = Effect::Kind::kAppend;
    e.target = j.at("append").get<std::string>();
    e.value = str(j, "value");
  } else if (j.contains("lookup")) {
    e.kind = Effect::Kind::kLookup;
    e.table = j.at("lookup").get<std::string>();
    e.match = j.value("match", std::map<std::string, std::string>{});
    e.assign = j.value("assign", std::map<std::string, std::string>{});
    if (auto it = j.find("else"); it != j.end()) {
      for (const auto& sub : *it) e.otherwise.push_back(parse_effect(sub, where));
    }
  } else if (j.contains("pick")) {
    e.kind = Effect::Kind::kPick;
    e.target = j.at("pick").get<std::string>();
    e.choices = str_list(j, "from");
    e.value = str(j, "by");
    if (e.choices.empty()) fail(where, "pick effect needs a nonempty 'from'");
  } else {
    fail(where, "unknown effect " + j.dump());
  }
  return e;
}

WidgetDef parse_widget(const json& j, const std::string& where) {
  WidgetDef w;
  w.key = str(j, "key");
  auto kind = parse_widget_kind(str(j, "kind"));
  if (!kind) fail(where, "widget '" + w.key + "' has unknown kind");
  w.kind = *kind;
  w.text = str(j, "text");
  w.bind = str(j, "bind");
  w.each = str(j, "each");
  w.page = j.value("page", 0);
  if (j.contains("if")) w.visible_if = parse_condition(j.at("if"), where);
  return w;
}

ScriptStepDef parse_script_step(const json& j, const std::string& where) {
  ScriptStepDef s;
  if (j.contains("click")) {
    s.type = ActionType::kClick;
    s.key = j.at("click").get<std::string>();
  } else if (j.contains("click_text")) {
    s.type = ActionType::kClick;
    s.key = j.at("click_text").get<std::string>();
    s.by_label = true;
  } else if (j.contains("input")) {
    s.type = ActionType::kInput;
    s.text = j.at("input").get<std::string>();
  } else if (j.contains("swipe")) {
    s.type = ActionType::kSwipe;
    auto d = parse_direction(j.at("swipe").get<std::string>());
    if (!d) fail(where, "bad swipe direction");
    s.direction = *d;
  } else if (j.contains("back")) {
    s.type = ActionType::kBack;
  } else {
    fail(where, "unknown script step " + j.dump());
  }
  return s;
}

TaskTemplate parse_template(const json& j, const std::string& app_where) {
  TaskTemplate t;
  t.id = str(j, "id");
  std::string where = app_where + " template '" + t.id + "'";
  t.text = str(j, "text");
  t.capability = str(j, "capability");
  t.row_table = str(j, "row");
  if (auto it = j.find("params"); it != j.end()) {
    for (const auto& [name, p] : it->items()) {
      ParamDef def;
      def.name = name;
      def.column = str(p, "column");
      def.pool = str_list(p, "pool");
      t.params.push_back(std::move(def));
    }
  }
  if (auto it = j.find("slots"); it != j.end()) {
    for (const auto& [name, s] : it->items()) {
      SlotDef def;
      def.name = name;
      def.accepts = str_list(s, "accepts");
      def.pool = str_list(s, "pool");
      t.slots.push_back(std::move(def));
    }
  }
  if (auto it = j.find("outputs"); it != j.end()) {
    for (const auto& o : *it) {
      t.outputs.push_back({str(o, "label"), str(o, "type"), str(o, "var"), str(o, "phrase")});
    }
  }
  for (const auto& s : j.at("script")) t.script.push_back(parse_script_step(s, where));
  const auto& goal = j.at("goal");
  t.goal_predicate = str(goal, "predicate");
  t.goal_args = str_list(goal, "args");
  return t;
}

}  // namespace

MockApp parse_app(const json& doc) {
  MockApp app;
  app.app_id = str(doc, "app_id");
  std::string where = "app '" + app.app_id + "'";
  if (doc.value("format", 0) != 1) fail(where, "unsupported format version");
  app.name = str(doc, "name");
  app.category = str(doc, "category");
  app.description = str(doc, "description");
  app.root = str(doc, "root");
  app.vars = doc.value("vars", std::map<std::string, std::string>{});
  app.lists = doc.value("lists", std::map<std::string, std::vector<std::string>>{});
  if (auto it = doc.find("tables"); it != doc.end()) {
    for (const auto& [name, rows] : it->items()) {
      app.tables[name] = rows.get<std::vector<TableRow>>();
    }
  }
  for (const auto& s : doc.at("screens")) {
    ScreenDef def;
    def.id = str(s, "id");
    for (const auto& w : s.at("widgets")) def.widgets.push_back(parse_widget(w, where));
    app.screens.push_back(std::move(def));
  }
  for (const auto& t : doc.value("transitions", json::array())) {
    Transition tr;
    tr.screen = str(t, "screen");
    tr.click = str(t, "click");
    if (t.contains("swipe")) {
      tr.swipe = parse_direction(t.at("swipe").get<std::string>());
      if (!tr.swipe) fail(where, "bad swipe direction in transition");
    }
    tr.go = str(t, "go");
    tr.require = parse_conditions(t, "require", where);
    if (auto it = t.find("effects"); it != t.end()) {
      for (const auto& e : *it) tr.effects.push_back(parse_effect(e, where));
    }
    tr.note = str(t, "note");
    app.transitions.push_back(std::move(tr));
  }
  for (const auto& p : doc.value("predicates", json::array())) {
    PredicateDef def;
    def.name = str(p, "name");
    def.params = str_list(p, "params");
    def.all = parse_conditions(p, "all", where);
    app.predicates.push_back(std::move(def));
  }
  for (const auto& t : doc.value("templates", json::array())) {
    app.templates.push_back(parse_template(t, where));
  }
  return app;
}

std::vector<std::string> validate_app(const MockApp& app) {
  std::vector<std::string> problems;
  auto bad = [&](const std::string& what) { problems.push_back(app.app_id + ": " + what); };
  if (app.app_id.empty() || app.app_id == "home") bad("invalid app_id");
  if (app.name.empty()) bad("missing name");
  if (app.description.empty()) bad("missing description");
  if (!app.screen(app.root)) bad("root screen '" + app.root + "' not declared");

  auto var_known = [&](const std::string& v) { return app.vars.count(v) > 0; };
  auto list_known = [&](const std::string& l) {
    return app.lists.count(l) > 0;
  };
  auto check_condition = [&](const Condition& c, const std::string& ctx) {
    if (c.kind == Condition::Kind::kListContains ? !list_known(c.name) : !var_known(c.name)) {
      bad(ctx + ": condition references undeclared '" + c.name + "'");
    }
  };
  std::function<void(const Effect&, const std::string&)> check_effect =
      [&](const Effect& e, const std::string& ctx) {
        switch (e.kind) {
          case Effect::Kind::kSet:
          case Effect::Kind::kPick:
            if (!var_known(e.target)) bad(ctx + ": effect sets undeclared var '" + e.target + "'");
            break;
          case Effect::Kind::kAppend:
            if (!list_known(e.target)) bad(ctx + ": effect appends to undeclared list '" + e.target + "'");
            break;
          case Effect::Kind::kLookup:
            if (!app.tables.count(e.table)) bad(ctx + ": lookup of unknown table '" + e.table + "'");
            for (const auto& [var, col] : e.assign) {
              if (!var_known(var)) bad(ctx + ": lookup assigns undeclared var '" + var + "'");
            }
            for (const auto& sub : e.otherwise) check_effect(sub, ctx);
            break;
        }
      };

  std::set<std::string> screen_ids;
  for (const auto& s : app.screens) {
    if (!screen_ids.insert(s.id).second) bad("duplicate screen '" + s.id + "'");
    std::set<std::string> keys;
    for (const auto& w : s.widgets) {
      if (w.key.empty() || !keys.insert(w.key).second) bad(s.id + ": missing or duplicate widget key '" + w.key + "'");
      if (w.kind == WidgetKind::kTextField && !var_known(w.bind)) bad(s.id + "/" + w.key + ": text field bound to undeclared var");
      if (!w.each.empty() && !list_known(w.each)) bad(s.id + "/" + w.key + ": each over undeclared list");
      if (w.visible_if) check_condition(*w.visible_if, s.id + "/" + w.key);
    }
  }
  for (const auto& t : app.transitions) {
    std::string ctx = "transition " + t.screen + "/" + (t.click.empty() ? "swipe" : t.click);
    const ScreenDef* s = app.screen(t.screen);
    if (!s) {
      bad(ctx + ": unknown screen");
      continue;
    }
    if (t.click.empty() == !t.swipe.has_value()) bad(ctx + ": needs exactly one of click/swipe");
    if (!t.click.empty()) {
      const WidgetDef* w = s->widget(t.click);
      if (!w) bad(ctx + ": unknown widget");
      else if (!is_interactive(w->kind)) bad(ctx + ": label widgets are not clickable");
    }
    if (!t.go.empty() && t.go != kGoBack && t.go != kGoRoot && !app.screen(t.go)) {
      bad(ctx + ": goes to unknown screen '" + t.go + "'");
    }
    for (const auto& c : t.require) check_condition(c, ctx);
    for (const auto& e : t.effects) check_effect(e, ctx);
  }
  for (const auto& p : app.predicates) {
    for (const auto& c : p.all) check_condition(c, "predicate " + p.name);
    if (p.all.empty()) bad("predicate " + p.name + " has no conditions");
  }
  for (const auto& t : app.templates) {
    std::string ctx = "template " + t.id;
    const PredicateDef* p = app.predicate(t.goal_predicate);
    if (!p) bad(ctx + ": goal uses unknown predicate '" + t.goal_predicate + "'");
    else if (p->params.size() != t.goal_args.size()) bad(ctx + ": goal arity mismatch");
    for (const auto& name : text::slot_names(t.text)) {
      bool is_param = std::any_of(t.params.begin(), t.params.end(), [&](const auto& d) { return d.name == name; });
      if (!is_param && !t.slot(name)) bad(ctx + ": text names unknown slot '" + name + "'");
    }
    for (const auto& pd : t.params) {
      if (!pd.column.empty() && !app.tables.count(t.row_table)) bad(ctx + ": param '" + pd.name + "' reads a column without a row table");
      if (pd.column.empty() && pd.pool.empty()) bad(ctx + ": param '" + pd.name + "' has no values");
    }
    for (const auto& s : t.slots) {
      if (s.pool.empty()) bad(ctx + ": slot '" + s.name + "' has an empty fallback pool");
    }
    for (const auto& o : t.outputs) {
      if (!var_known(o.var)) bad(ctx + ": output reads undeclared var '" + o.var + "'");
      if (o.label.empty() || o.type.empty() || o.phrase.empty()) bad(ctx + ": incomplete output");
    }
    if (t.capability.empty()) bad(ctx + ": missing capability");
  }
  return problems;
}

const MockApp* AppRegistry::find(std::string_view app_id) const {
  for (const auto& a : apps_) {
    if (a.app_id == app_id) return &a;
  }
  return nullptr;
}

const MockApp& AppRegistry::at(std::string_view app_id) const {
  if (const MockApp* a = find(app_id)) return *a;
  throw Error(ErrorKind::kUnknownApp, "unknown app '" + std::string(app_id) + "'");
}

std::vector<std::string> AppRegistry::app_ids() const {
  std::vector<std::string> ids;
  for (const auto& a : apps_) ids.push_back(a.app_id);
  return ids;
}

std::shared_ptr<const AppRegistry> AppRegistry::from_apps(std::vector<MockApp> apps) {
  std::sort(apps.begin(), apps.end(), [](const auto& a, const auto& b) { return a.app_id < b.app_id; });
  std::vector<std::string> problems;
  for (std::size_t i = 0; i < apps.size(); ++i) {
    if (i && apps[i].app_id == apps[i - 1].app_id) problems.push_back("duplicate app '" + apps[i].app_id + "'");
    auto p = validate_app(apps[i]);
    problems.insert(problems.end(), p.begin(), p.end());
  }
  if (!problems.empty()) throw Error(ErrorKind::kRegistry, text::join(problems, "; "));
  auto reg = std::shared_ptr<AppRegistry>(new AppRegistry());
  reg->apps_ = std::move(apps);
  std::shared_ptr<const AppRegistry> frozen = reg;
  problems = check_goal_reachability(frozen);
  if (!problems.empty()) throw Error(ErrorKind::kRegistry, text::join(problems, "; "));
  return frozen;
}

std::shared_ptr<const AppRegistry> AppRegistry::load_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorKind::kIo, "app registry directory not found: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<MockApp> apps;
  for (const auto& f : files) {
    std::ifstream in(f);
    json doc;
    try {
      in >> doc;
    } catch (const json::exception& e) {
      throw Error(ErrorKind::kRegistry, f.string() + ": " + e.what());
    }
    try {
      apps.push_back(parse_app(doc));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::kRegistry, f.string() + ": " + e.what());
    }
  }
  return from_apps(std::move(apps));
}

std::filesystem::path default_data_dir() {
  if (const char* env = std::getenv("STEWARD_DATA_DIR"); env && *env) return env;
  return STEWARD_DATA_DIR;
}

}  // namespace steward
