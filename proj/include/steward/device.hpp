#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "steward/app.hpp"
#include "steward/screen.hpp"

namespace steward {

inline constexpr std::string_view kHomeApp = "home";
inline constexpr std::string_view kHomeScreen = "launcher";

struct GoalCall {
  std::string predicate;
  std::vector<std::string> args;

  bool operator==(const GoalCall&) const = default;
};

/// Mutable per-app state: variables, lists, navigation stack and focus.
struct AppState {
  std::map<std::string, std::string> vars;
  std::map<std::string, std::vector<std::string>> lists;
  std::vector<std::string> stack;  // empty while the app is not running
  int scroll = 0;
  std::string focus;  // widget instance key of the focused text field

  bool operator==(const AppState&) const = default;
};

/// A simulated phone. Single owner; all mutation goes through apply_action()
/// and go_home().
class DeviceEnv {
 public:
  explicit DeviceEnv(std::shared_ptr<const AppRegistry> registry);

  const AppRegistry& registry() const { return *registry_; }
  std::shared_ptr<const AppRegistry> registry_ptr() const { return registry_; }

  ScreenState get_state() const;
  StepOutcome apply_action(const Action& action);

  /// The hardware home button. Returns true if the foreground changed.
  bool go_home();

  const std::string& foreground() const { return foreground_; }
  bool at_home() const { return foreground_ == kHomeApp; }

  /// Element id of the launcher button for `app_id` on the home screen.
  int launcher_id(std::string_view app_id) const;

  /// Throws Error(kUnknownPredicate) when the predicate is not registered
  /// or the argument count does not match.
  bool check_goal(std::string_view app_id, const GoalCall& goal) const;

  const AppState& app_state(std::string_view app_id) const;

  /// Instance key of the widget with `element_id` on the current screen.
  std::string widget_key(int element_id) const;
  /// Element id for a widget instance key on the current screen, or 0.
  int element_for_key(std::string_view key) const;

  bool operator==(const DeviceEnv& other) const {
    return foreground_ == other.foreground_ && states_ == other.states_;
  }

 private:
  struct Rendered {
    Widget widget;
    std::string key;      // instance key ("key" or "key.N" for list rows)
    std::string def_key;  // WidgetDef key
    std::string item;
  };

  std::vector<Rendered> render() const;
  AppState& mutable_state(std::string_view app_id);
  void launch(const MockApp& app);
  StepOutcome click(int element_id);
  StepOutcome input(const std::string& text);
  StepOutcome swipe(SwipeDirection d);
  StepOutcome back();
  void navigate(const MockApp& app, AppState& st, const std::string& go);

  std::shared_ptr<const AppRegistry> registry_;
  std::string foreground_;
  std::map<std::string, AppState, std::less<>> states_;
};

/// Evaluates a condition against app state with template bindings.
bool eval_condition(const Condition& c, const AppState& st,
                    const std::map<std::string, std::string>& bindings);

/// A concrete ground-truth step: what to do, plus the label the oracle uses to
/// re-resolve the element on a live screen.
struct ScriptStep {
  ActionType type = ActionType::kFinish;
  int element_id = 0;
  std::string target;
  std::string text;
  SwipeDirection direction = SwipeDirection::kDown;

  Action to_action() const;
  /// Same format as action_key().
  std::string key() const;

  bool operator==(const ScriptStep&) const = default;
};

struct TemplateReplay {
  std::vector<ScriptStep> steps;  // excludes the launcher click
  std::map<std::string, std::string> outputs;  // output label -> value
  GoalCall goal;
};

/// Launches the template's app from home and replays its script with the
/// given parameter/slot bindings. Throws Error(kRegistry) when a step cannot
/// be resolved on the screen it lands on.
TemplateReplay replay_template(DeviceEnv& env, const MockApp& app, const TaskTemplate& tmpl,
                               const std::map<std::string, std::string>& bindings);

/// Default bindings: the first table row and the first pool value per slot.
std::map<std::string, std::string> sample_bindings(const MockApp& app, const TaskTemplate& tmpl,
                                                   std::size_t row = 0);

/// Every predicate must be the goal of some template whose sample replay
/// satisfies it on a fresh device.
std::vector<std::string> check_goal_reachability(const std::shared_ptr<const AppRegistry>& registry);

}  // namespace steward
