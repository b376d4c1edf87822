#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace steward {

enum class WidgetKind { kButton, kTextField, kListItem, kLabel };

std::string_view to_string(WidgetKind kind);
std::optional<WidgetKind> parse_widget_kind(std::string_view s);

/// Labels are the only non-interactive kind.
constexpr bool is_interactive(WidgetKind kind) { return kind != WidgetKind::kLabel; }

struct Widget {
  int element_id = 0;
  WidgetKind kind = WidgetKind::kLabel;
  std::string text;
  bool interactive = false;

  bool operator==(const Widget&) const = default;
};

/// The label a widget is addressed by. Filled text fields render as
/// "Label: value"; their label is the part before the first ": ".
std::string widget_label(const Widget& w);

/// True when `w` is the widget addressed as `target`.
bool widget_matches(const Widget& w, std::string_view target);

struct ScreenState {
  std::string app_id;
  std::string screen_id;
  std::vector<Widget> widgets;
  int scroll_offset = 0;

  const Widget* find(int element_id) const;
  const Widget* find_by_label(std::string_view target) const;

  bool operator==(const ScreenState&) const = default;
};

enum class SwipeDirection { kUp, kDown, kRight, kLeft };
std::string_view to_string(SwipeDirection d);
std::optional<SwipeDirection> parse_direction(std::string_view s);

enum class ActionType { kClick, kInput, kSwipe, kBack, kFinish };
std::string_view to_string(ActionType t);

/// One staff action. The set of alternatives is closed and each carries exactly
/// the parameters its type needs.
class Action {
 public:
  struct Click { int element_id; bool operator==(const Click&) const = default; };
  struct Input { std::string text; bool operator==(const Input&) const = default; };
  struct Swipe { SwipeDirection direction; bool operator==(const Swipe&) const = default; };
  struct Back { bool operator==(const Back&) const = default; };
  struct Finish { bool operator==(const Finish&) const = default; };

  static Action click(int element_id) { return Action(Click{element_id}); }
  static Action input(std::string text) { return Action(Input{std::move(text)}); }
  static Action swipe(SwipeDirection d) { return Action(Swipe{d}); }
  static Action back() { return Action(Back{}); }
  static Action finish() { return Action(Finish{}); }

  ActionType type() const { return static_cast<ActionType>(value_.index()); }
  bool is_finish() const { return type() == ActionType::kFinish; }

  /// Accessors; calling the wrong one throws std::bad_variant_access.
  int element_id() const { return std::get<Click>(value_).element_id; }
  const std::string& text() const { return std::get<Input>(value_).text; }
  SwipeDirection direction() const { return std::get<Swipe>(value_).direction; }

  /// "click 3", "input \"Shanghai\"", "swipe down", "back", "finish".
  std::string to_string() const;
  /// Inverse of to_string(); nullopt on anything malformed.
  static std::optional<Action> parse(std::string_view s);

  bool operator==(const Action&) const = default;

 private:
  using Value = std::variant<Click, Input, Swipe, Back, Finish>;
  explicit Action(Value v) : value_(std::move(v)) {}
  Value value_;
};

/// Semantic identity of an action on a given screen: clicks are keyed by the
/// target's label rather than its element id ("click:Search", "input:London").
std::string action_key(const Action& a, const ScreenState& state);

enum class StepError { kNone, kUnknownElement, kInputWithoutField, kNotInteractive };
std::string_view to_string(StepError e);

struct StepOutcome {
  bool changed = false;
  std::string note;
  StepError error = StepError::kNone;

  bool is_error() const { return error != StepError::kNone; }
};

}  // namespace steward
