#include "steward/device.hpp"

#include <algorithm>

#include "steward/error.hpp"
#include "steward/text.hpp"

namespace steward {

namespace {

std::map<std::string, std::string> with_item(const std::map<std::string, std::string>& vars,
                                             const std::string& item) {
  auto b = vars;
  b["item"] = item;
  return b;
}

void apply_effect(const Effect& e, const MockApp& app, AppState& st, const std::string& item) {
  auto bindings = with_item(st.vars, item);
  switch (e.kind) {
    case Effect::Kind::kSet:
      st.vars[e.target] = text::normalize(text::interpolate(e.value, bindings), e.normalize);
      break;
    case Effect::Kind::kAppend:
      st.lists[e.target].push_back(text::normalize(text::interpolate(e.value, bindings), e.normalize));
      break;
    case Effect::Kind::kPick: {
      std::string by = text::lower(text::trim(text::interpolate(e.value, bindings)));
      st.vars[e.target] = e.choices[text::fnv1a(by) % e.choices.size()];
      break;
    }
    case Effect::Kind::kLookup: {
      const auto& rows = app.tables.at(e.table);
      for (const auto& row : rows) {
        bool ok = true;
        for (const auto& [col, tmpl] : e.match) {
          auto it = row.find(col);
          if (it == row.end() ||
              !text::iequals(text::trim(it->second), text::trim(text::interpolate(tmpl, bindings)))) {
            ok = false;
            break;
          }
        }
        if (!ok) continue;
        for (const auto& [var, col] : e.assign) {
          auto it = row.find(col);
          st.vars[var] = it == row.end() ? "" : it->second;
        }
        return;
      }
      for (const auto& sub : e.otherwise) apply_effect(sub, app, st, item);
      break;
    }
  }
}

}  // namespace

bool eval_condition(const Condition& c, const AppState& st,
                    const std::map<std::string, std::string>& bindings) {
  switch (c.kind) {
    case Condition::Kind::kVarNonEmpty: {
      auto it = st.vars.find(c.name);
      return it != st.vars.end() && !text::trim(it->second).empty();
    }
    case Condition::Kind::kVarEquals: {
      auto it = st.vars.find(c.name);
      std::string have = it == st.vars.end() ? "" : it->second;
      std::string want = text::interpolate(c.value, bindings);
      return text::iequals(text::trim(text::normalize(have, c.normalize)),
                           text::trim(text::normalize(want, c.normalize)));
    }
    case Condition::Kind::kListContains: {
      auto it = st.lists.find(c.name);
      if (it == st.lists.end()) return false;
      std::string want = text::trim(text::normalize(text::interpolate(c.value, bindings), c.normalize));
      return std::any_of(it->second.begin(), it->second.end(), [&](const std::string& have) {
        return text::iequals(text::trim(text::normalize(have, c.normalize)), want);
      });
    }
  }
  return false;
}

DeviceEnv::DeviceEnv(std::shared_ptr<const AppRegistry> registry)
    : registry_(std::move(registry)), foreground_(kHomeApp) {
  for (const auto& app : registry_->apps()) {
    AppState st;
    st.vars = app.vars;
    st.lists = app.lists;
    states_.emplace(app.app_id, std::move(st));
  }
}

const AppState& DeviceEnv::app_state(std::string_view app_id) const {
  auto it = states_.find(app_id);
  if (it == states_.end()) throw Error(ErrorKind::kUnknownApp, "unknown app '" + std::string(app_id) + "'");
  return it->second;
}

AppState& DeviceEnv::mutable_state(std::string_view app_id) {
  return const_cast<AppState&>(app_state(app_id));
}

std::vector<DeviceEnv::Rendered> DeviceEnv::render() const {
  std::vector<Rendered> out;
  if (at_home()) {
    int id = 1;
    for (const auto& app : registry_->apps()) {
      out.push_back({Widget{id++, WidgetKind::kButton, app.name, true}, "launch." + app.app_id,
                     "launch." + app.app_id, ""});
    }
    return out;
  }
  const MockApp& app = registry_->at(foreground_);
  const AppState& st = app_state(foreground_);
  const ScreenDef* screen = app.screen(st.stack.back());
  int id = 1;
  auto emit = [&](const WidgetDef& def, std::string key, const std::string& item) {
    Widget w;
    w.element_id = id++;
    w.kind = def.kind;
    w.interactive = is_interactive(def.kind);
    w.text = text::interpolate(def.text, with_item(st.vars, item));
    if (def.kind == WidgetKind::kTextField) {
      auto it = st.vars.find(def.bind);
      if (it != st.vars.end() && !it->second.empty()) w.text += ": " + it->second;
    }
    out.push_back({std::move(w), std::move(key), def.key, item});
  };
  for (const auto& def : screen->widgets) {
    if (def.page > st.scroll) continue;
    if (def.visible_if && !eval_condition(*def.visible_if, st, st.vars)) continue;
    if (!def.each.empty()) {
      const auto& items = st.lists.at(def.each);
      for (std::size_t i = 0; i < items.size(); ++i) {
        emit(def, def.key + "." + std::to_string(i), items[i]);
      }
    } else {
      emit(def, def.key, "");
    }
  }
  return out;
}

ScreenState DeviceEnv::get_state() const {
  ScreenState s;
  if (at_home()) {
    s.app_id = std::string(kHomeApp);
    s.screen_id = std::string(kHomeScreen);
  } else {
    const AppState& st = app_state(foreground_);
    s.app_id = foreground_;
    s.screen_id = st.stack.back();
    s.scroll_offset = st.scroll;
  }
  for (auto& r : render()) s.widgets.push_back(std::move(r.widget));
  return s;
}

int DeviceEnv::launcher_id(std::string_view app_id) const {
  const auto& apps = registry_->apps();
  for (std::size_t i = 0; i < apps.size(); ++i) {
    if (apps[i].app_id == app_id) return static_cast<int>(i) + 1;
  }
  throw Error(ErrorKind::kUnknownApp, "unknown app '" + std::string(app_id) + "'");
}

std::string DeviceEnv::widget_key(int element_id) const {
  for (const auto& r : render()) {
    if (r.widget.element_id == element_id) return r.key;
  }
  return {};
}

int DeviceEnv::element_for_key(std::string_view key) const {
  for (const auto& r : render()) {
    if (r.key == key) return r.widget.element_id;
  }
  return 0;
}

bool DeviceEnv::go_home() {
  if (at_home()) return false;
  AppState& st = mutable_state(foreground_);
  st.stack.clear();
  st.scroll = 0;
  st.focus.clear();
  foreground_ = std::string(kHomeApp);
  return true;
}

void DeviceEnv::launch(const MockApp& app) {
  AppState& st = mutable_state(app.app_id);
  st.stack = {app.root};
  st.scroll = 0;
  st.focus.clear();
  foreground_ = app.app_id;
}

void DeviceEnv::navigate(const MockApp& app, AppState& st, const std::string& go) {
  if (go.empty()) return;
  st.scroll = 0;
  st.focus.clear();
  if (go == kGoBack) {
    st.stack.pop_back();
    if (st.stack.empty()) foreground_ = std::string(kHomeApp);
  } else if (go == kGoRoot) {
    st.stack = {app.root};
  } else {
    st.stack.push_back(go);
  }
}

StepOutcome DeviceEnv::apply_action(const Action& action) {
  auto before_fg = foreground_;
  auto before_states = states_;
  StepOutcome out;
  switch (action.type()) {
    case ActionType::kClick: out = click(action.element_id()); break;
    case ActionType::kInput: out = input(action.text()); break;
    case ActionType::kSwipe: out = swipe(action.direction()); break;
    case ActionType::kBack: out = back(); break;
    case ActionType::kFinish: out.note = "Task declared finished"; break;
  }
  out.changed = before_fg != foreground_ || before_states != states_;
  return out;
}

StepOutcome DeviceEnv::click(int element_id) {
  StepOutcome out;
  auto rendered = render();
  auto it = std::find_if(rendered.begin(), rendered.end(),
                         [&](const Rendered& r) { return r.widget.element_id == element_id; });
  if (it == rendered.end()) {
    out.error = StepError::kUnknownElement;
    out.note = "No element " + std::to_string(element_id) + " on this screen";
    return out;
  }
  const Rendered& r = *it;
  if (at_home()) {
    const MockApp& app = registry_->at(r.key.substr(std::string("launch.").size()));
    launch(app);
    out.note = "Opened " + app.name;
    return out;
  }
  std::string label = widget_label(r.widget);
  if (!r.widget.interactive) {
    out.error = StepError::kNotInteractive;
    out.note = "\"" + label + "\" is not interactive";
    return out;
  }
  const MockApp& app = registry_->at(foreground_);
  AppState& st = mutable_state(foreground_);
  const std::string screen = st.stack.back();
  if (r.widget.kind == WidgetKind::kTextField) {
    st.focus = r.key;
    out.note = "Focused text field \"" + label + "\"";
  }
  const Transition* tr = app.click_transition(screen, r.def_key);
  if (!tr) {
    if (r.widget.kind != WidgetKind::kTextField) out.note = "Tapped \"" + label + "\"; nothing happened";
    return out;
  }
  auto bindings = with_item(st.vars, r.item);
  for (const auto& c : tr->require) {
    if (!eval_condition(c, st, bindings)) {
      out.note = "Tapped \"" + label + "\" but it had no effect (requires " + c.name + ")";
      return out;
    }
  }
  for (const auto& e : tr->effects) apply_effect(e, app, st, r.item);
  navigate(app, st, tr->go);
  std::string dest;
  if (at_home()) dest = "the home screen";
  else if (!tr->go.empty()) dest = "screen \"" + st.stack.back() + "\"";
  out.note = tr->note.empty() ? "Tapped \"" + label + "\"" : tr->note;
  if (!dest.empty()) out.note += "; now on " + dest;
  return out;
}

StepOutcome DeviceEnv::input(const std::string& value) {
  StepOutcome out;
  if (!at_home()) {
    AppState& st = mutable_state(foreground_);
    if (!st.focus.empty()) {
      for (const auto& r : render()) {
        if (r.key != st.focus) continue;
        const MockApp& app = registry_->at(foreground_);
        const WidgetDef* def = app.screen(st.stack.back())->widget(r.def_key);
        st.vars[def->bind] = value;
        out.note = "Typed \"" + value + "\" into \"" + widget_label(r.widget) + "\"";
        return out;
      }
    }
  }
  out.error = StepError::kInputWithoutField;
  out.note = "No text field is focused; input ignored";
  return out;
}

StepOutcome DeviceEnv::swipe(SwipeDirection d) {
  StepOutcome out;
  if (at_home()) {
    out.note = "Swiped " + std::string(to_string(d)) + " on the home screen; nothing happened";
    return out;
  }
  const MockApp& app = registry_->at(foreground_);
  AppState& st = mutable_state(foreground_);
  const ScreenDef* screen = app.screen(st.stack.back());
  if (const Transition* tr = app.swipe_transition(screen->id, d)) {
    for (const auto& e : tr->effects) apply_effect(e, app, st, "");
    navigate(app, st, tr->go);
    out.note = tr->note.empty() ? "Swiped " + std::string(to_string(d)) : tr->note;
    return out;
  }
  if (d == SwipeDirection::kDown && st.scroll < screen->max_page()) {
    ++st.scroll;
    out.note = "Scrolled down to page " + std::to_string(st.scroll);
  } else if (d == SwipeDirection::kUp && st.scroll > 0) {
    --st.scroll;
    out.note = "Scrolled up to page " + std::to_string(st.scroll);
  } else {
    out.note = "Swiped " + std::string(to_string(d)) + "; nothing more to show";
  }
  return out;
}

StepOutcome DeviceEnv::back() {
  StepOutcome out;
  if (at_home()) {
    out.note = "Already on the home screen";
    return out;
  }
  const MockApp& app = registry_->at(foreground_);
  AppState& st = mutable_state(foreground_);
  navigate(app, st, std::string(kGoBack));
  out.note = at_home() ? "Returned to the home screen" : "Back to screen \"" + st.stack.back() + "\"";
  return out;
}

bool DeviceEnv::check_goal(std::string_view app_id, const GoalCall& goal) const {
  const MockApp* app = registry_->find(app_id);
  const PredicateDef* p = app ? app->predicate(goal.predicate) : nullptr;
  if (!p) {
    throw Error(ErrorKind::kUnknownPredicate,
                "unknown predicate " + std::string(app_id) + "." + goal.predicate);
  }
  if (p->params.size() != goal.args.size()) {
    throw Error(ErrorKind::kUnknownPredicate, "predicate " + goal.predicate + " expects " +
                                                  std::to_string(p->params.size()) + " arguments");
  }
  std::map<std::string, std::string> bindings;
  for (std::size_t i = 0; i < p->params.size(); ++i) bindings[p->params[i]] = goal.args[i];
  const AppState& st = app_state(app_id);
  return std::all_of(p->all.begin(), p->all.end(),
                     [&](const Condition& c) { return eval_condition(c, st, bindings); });
}

Action ScriptStep::to_action() const {
  switch (type) {
    case ActionType::kClick: return Action::click(element_id);
    case ActionType::kInput: return Action::input(text);
    case ActionType::kSwipe: return Action::swipe(direction);
    case ActionType::kBack: return Action::back();
    case ActionType::kFinish: return Action::finish();
  }
  return Action::finish();
}

std::string ScriptStep::key() const {
  switch (type) {
    case ActionType::kClick: return "click:" + target;
    case ActionType::kInput: return "input:" + text;
    case ActionType::kSwipe: return "swipe:" + std::string(to_string(direction));
    case ActionType::kBack: return "back";
    case ActionType::kFinish: return "finish";
  }
  return "finish";
}

TemplateReplay replay_template(DeviceEnv& env, const MockApp& app, const TaskTemplate& tmpl,
                               const std::map<std::string, std::string>& bindings) {
  auto fail = [&](const std::string& what) {
    throw Error(ErrorKind::kRegistry, app.app_id + "/" + tmpl.id + ": " + what);
  };
  env.go_home();
  env.apply_action(Action::click(env.launcher_id(app.app_id)));
  TemplateReplay out;
  for (const auto& def : tmpl.script) {
    ScriptStep step;
    step.type = def.type;
    if (def.type == ActionType::kClick) {
      int id = 0;
      if (def.by_label) {
        std::string label = text::interpolate(def.key, bindings);
        if (const Widget* w = env.get_state().find_by_label(label)) id = w->element_id;
      } else {
        id = env.element_for_key(def.key);
      }
      if (id == 0) fail("widget '" + def.key + "' not on screen " + env.get_state().screen_id);
      step.element_id = id;
      step.target = widget_label(*env.get_state().find(id));
    } else if (def.type == ActionType::kInput) {
      step.text = text::interpolate(def.text, bindings);
    } else if (def.type == ActionType::kSwipe) {
      step.direction = def.direction;
    }
    StepOutcome o = env.apply_action(step.to_action());
    if (o.is_error()) fail("step " + step.key() + " failed: " + o.note);
    out.steps.push_back(std::move(step));
  }
  const AppState& st = env.app_state(app.app_id);
  for (const auto& o : tmpl.outputs) {
    auto it = st.vars.find(o.var);
    if (it == st.vars.end() || text::trim(it->second).empty()) fail("output '" + o.label + "' not produced");
    out.outputs[o.label] = it->second;
  }
  out.goal.predicate = tmpl.goal_predicate;
  for (const auto& a : tmpl.goal_args) out.goal.args.push_back(text::interpolate(a, bindings));
  return out;
}

std::map<std::string, std::string> sample_bindings(const MockApp& app, const TaskTemplate& tmpl,
                                                   std::size_t row) {
  std::map<std::string, std::string> b;
  const TableRow* r = nullptr;
  if (!tmpl.row_table.empty()) {
    const auto& rows = app.tables.at(tmpl.row_table);
    if (!rows.empty()) r = &rows[row % rows.size()];
  }
  for (const auto& p : tmpl.params) {
    if (!p.column.empty()) {
      if (r && r->count(p.column)) b[p.name] = r->at(p.column);
    } else {
      b[p.name] = p.pool[row % p.pool.size()];
    }
  }
  for (const auto& s : tmpl.slots) b[s.name] = s.pool[row % s.pool.size()];
  return b;
}

std::vector<std::string> check_goal_reachability(const std::shared_ptr<const AppRegistry>& registry) {
  std::vector<std::string> problems;
  for (const auto& app : registry->apps()) {
    for (const auto& p : app.predicates) {
      bool reached = false;
      for (const auto& t : app.templates) {
        if (t.goal_predicate != p.name) continue;
        DeviceEnv env(registry);
        try {
          auto replay = replay_template(env, app, t, sample_bindings(app, t));
          if (env.check_goal(app.app_id, replay.goal)) {
            reached = true;
          } else {
            problems.push_back(app.app_id + "/" + t.id + ": script does not satisfy " + p.name);
          }
        } catch (const Error& e) {
          problems.push_back(e.what());
        }
      }
      if (!reached) problems.push_back(app.app_id + ": predicate " + p.name + " is unreachable");
    }
  }
  return problems;
}

}  // namespace steward
