#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "steward/screen.hpp"

namespace steward {

/// A boolean test over an app's internal state. Values are templates
/// interpolated against the evaluation bindings before comparison;
/// comparisons are case-insensitive after normalization.
struct Condition {
  enum class Kind { kVarEquals, kVarNonEmpty, kListContains };
  Kind kind = Kind::kVarNonEmpty;
  std::string name;
  std::string value;
  std::string normalize;
};

/// A state mutation applied when a transition fires.
struct Effect {
  enum class Kind { kSet, kAppend, kLookup, kPick };
  Kind kind = Kind::kSet;
  std::string target;  // var (set/pick) or list (append)
  std::string value;   // template (set/append) or hash key template (pick)
  std::string normalize;
  // lookup
  std::string table;
  std::map<std::string, std::string> match;   // column -> template
  std::map<std::string, std::string> assign;  // var -> column
  std::vector<Effect> otherwise;
  // pick
  std::vector<std::string> choices;
};

struct WidgetDef {
  std::string key;
  WidgetKind kind = WidgetKind::kLabel;
  std::string text;  // template over app vars ("{item}" inside `each` rows)
  std::string bind;  // text fields: var receiving input
  std::string each;  // list var: one widget per element
  int page = 0;      // revealed once scroll_offset >= page
  std::optional<Condition> visible_if;
};

struct ScreenDef {
  std::string id;
  std::vector<WidgetDef> widgets;

  const WidgetDef* widget(std::string_view key) const;
  int max_page() const;
};

inline constexpr std::string_view kGoBack = "<back>";
inline constexpr std::string_view kGoRoot = "<root>";

struct Transition {
  std::string screen;
  std::string click;  // widget key, or empty for swipe transitions
  std::optional<SwipeDirection> swipe;
  std::string go;     // "" stays, "<back>" pops, "<root>" resets, else push
  std::vector<Condition> require;
  std::vector<Effect> effects;
  std::string note;
};

struct PredicateDef {
  std::string name;
  std::vector<std::string> params;
  std::vector<Condition> all;
};

/// A template parameter filled with a literal at generation time, either from
/// the template's table row or from a pool.
struct ParamDef {
  std::string name;
  std::string column;
  std::vector<std::string> pool;
};

/// A template slot that can be fed by an upstream task's output of an
/// accepted type, or filled from `pool` when the task stands alone.
struct SlotDef {
  std::string name;
  std::vector<std::string> accepts;
  std::vector<std::string> pool;

  bool accepts_type(std::string_view type) const;
};

struct OutputDef {
  std::string label;
  std::string type;
  std::string var;
  std::string phrase;
};

struct ScriptStepDef {
  ActionType type = ActionType::kClick;
  std::string key;   // click target: widget key, or a label template when by_label
  bool by_label = false;
  std::string text;  // input template
  SwipeDirection direction = SwipeDirection::kDown;
};

struct TaskTemplate {
  std::string id;
  std::string text;        // "{name}" marks params and slots
  std::string capability;  // expertise phrase this template exercises
  std::string row_table;   // params with a column read from one row of this table
  std::vector<ParamDef> params;
  std::vector<SlotDef> slots;
  std::vector<OutputDef> outputs;
  std::vector<ScriptStepDef> script;
  std::string goal_predicate;
  std::vector<std::string> goal_args;  // templates over params and slots

  const SlotDef* slot(std::string_view name) const;
};

using TableRow = std::map<std::string, std::string>;

struct MockApp {
  std::string app_id;
  std::string name;
  std::string category;
  std::string description;
  std::string root;
  std::map<std::string, std::string> vars;
  std::map<std::string, std::vector<std::string>> lists;  // name -> initial items
  std::map<std::string, std::vector<TableRow>> tables;
  std::vector<ScreenDef> screens;
  std::vector<Transition> transitions;
  std::vector<PredicateDef> predicates;
  std::vector<TaskTemplate> templates;

  const ScreenDef* screen(std::string_view id) const;
  const PredicateDef* predicate(std::string_view name) const;
  const TaskTemplate* task_template(std::string_view id) const;
  const Transition* click_transition(std::string_view screen, std::string_view key) const;
  const Transition* swipe_transition(std::string_view screen, SwipeDirection d) const;
};

MockApp parse_app(const nlohmann::json& doc);

/// The installed apps, sorted by app_id. Loading validates structure and
/// replays every task template to prove each goal predicate is reachable.
class AppRegistry {
 public:
  static std::shared_ptr<const AppRegistry> load_dir(const std::filesystem::path& dir);
  static std::shared_ptr<const AppRegistry> from_apps(std::vector<MockApp> apps);

  const std::vector<MockApp>& apps() const { return apps_; }
  const MockApp* find(std::string_view app_id) const;
  const MockApp& at(std::string_view app_id) const;
  std::vector<std::string> app_ids() const;

 private:
  std::vector<MockApp> apps_;
};

/// Structural checks only; returns human-readable problems.
std::vector<std::string> validate_app(const MockApp& app);

/// Default data directory baked in at build time (overridable by the
/// STEWARD_DATA_DIR environment variable).
std::filesystem::path default_data_dir();

}  // namespace steward
