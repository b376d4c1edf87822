#include "steward/screen.hpp"

#include <charconv>

#include "steward/text.hpp"

namespace steward {

std::string_view to_string(WidgetKind kind) {
  switch (kind) {
    case WidgetKind::kButton: return "button";
    case WidgetKind::kTextField: return "text_field";
    case WidgetKind::kListItem: return "list_item";
    case WidgetKind::kLabel: return "label";
  }
  return "label";
}

std::optional<WidgetKind> parse_widget_kind(std::string_view s) {
  if (s == "button") return WidgetKind::kButton;
  if (s == "text_field") return WidgetKind::kTextField;
  if (s == "list_item") return WidgetKind::kListItem;
  if (s == "label") return WidgetKind::kLabel;
  return std::nullopt;
}

std::string widget_label(const Widget& w) {
  if (w.kind == WidgetKind::kTextField) {
    auto pos = w.text.find(": ");
    if (pos != std::string::npos) return w.text.substr(0, pos);
  }
  return w.text;
}

bool widget_matches(const Widget& w, std::string_view target) {
  return w.text == target || widget_label(w) == target;
}

const Widget* ScreenState::find(int element_id) const {
  for (const auto& w : widgets) {
    if (w.element_id == element_id) return &w;
  }
  return nullptr;
}

const Widget* ScreenState::find_by_label(std::string_view target) const {
  for (const auto& w : widgets) {
    if (w.interactive && widget_matches(w, target)) return &w;
  }
  return nullptr;
}

std::string_view to_string(SwipeDirection d) {
  switch (d) {
    case SwipeDirection::kUp: return "up";
    case SwipeDirection::kDown: return "down";
    case SwipeDirection::kRight: return "right";
    case SwipeDirection::kLeft: return "left";
  }
  return "up";
}

std::optional<SwipeDirection> parse_direction(std::string_view s) {
  if (s == "up") return SwipeDirection::kUp;
  if (s == "down") return SwipeDirection::kDown;
  if (s == "right") return SwipeDirection::kRight;
  if (s == "left") return SwipeDirection::kLeft;
  return std::nullopt;
}

std::string_view to_string(ActionType t) {
  switch (t) {
    case ActionType::kClick: return "click";
    case ActionType::kInput: return "input";
    case ActionType::kSwipe: return "swipe";
    case ActionType::kBack: return "back";
    case ActionType::kFinish: return "finish";
  }
  return "finish";
}

std::string Action::to_string() const {
  switch (type()) {
    case ActionType::kClick: return "click " + std::to_string(element_id());
    case ActionType::kInput: return "input " + text::quote(text());
    case ActionType::kSwipe: return "swipe " + std::string(steward::to_string(direction()));
    case ActionType::kBack: return "back";
    case ActionType::kFinish: return "finish";
  }
  return "finish";
}

std::optional<Action> Action::parse(std::string_view raw) {
  std::string s = text::trim(raw);
  auto space = s.find(' ');
  std::string verb = text::lower(s.substr(0, space));
  std::string rest = space == std::string::npos ? "" : text::trim(s.substr(space + 1));
  if (verb == "finish") return rest.empty() ? std::optional(finish()) : std::nullopt;
  if (verb == "back") return rest.empty() ? std::optional(back()) : std::nullopt;
  if (verb == "swipe") {
    auto d = parse_direction(text::lower(rest));
    if (!d) return std::nullopt;
    return swipe(*d);
  }
  if (verb == "click") {
    int id = 0;
    auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), id);
    if (ec != std::errc() || ptr != rest.data() + rest.size() || rest.empty()) return std::nullopt;
    return click(id);
  }
  if (verb == "input") {
    if (rest.size() < 2 || rest.front() != '"' || rest.back() != '"') return std::nullopt;
    std::string body;
    for (std::size_t i = 1; i + 1 < rest.size(); ++i) {
      if (rest[i] == '\\' && i + 2 < rest.size()) {
        ++i;
        body.push_back(rest[i] == 'n' ? '\n' : rest[i]);
        continue;
      }
      body.push_back(rest[i]);
    }
    return input(std::move(body));
  }
  return std::nullopt;
}

std::string action_key(const Action& a, const ScreenState& state) {
  switch (a.type()) {
    case ActionType::kClick: {
      const Widget* w = state.find(a.element_id());
      return "click:" + (w ? widget_label(*w) : "#" + std::to_string(a.element_id()));
    }
    case ActionType::kInput: return "input:" + a.text();
    case ActionType::kSwipe: return "swipe:" + std::string(to_string(a.direction()));
    case ActionType::kBack: return "back";
    case ActionType::kFinish: return "finish";
  }
  return "finish";
}

std::string_view to_string(StepError e) {
  switch (e) {
    case StepError::kNone: return "none";
    case StepError::kUnknownElement: return "unknown_element";
    case StepError::kInputWithoutField: return "input_without_field";
    case StepError::kNotInteractive: return "not_interactive";
  }
  return "none";
}

}  // namespace steward
