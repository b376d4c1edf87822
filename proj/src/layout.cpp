#include "steward/layout.hpp"

#include "steward/text.hpp"

namespace steward {

std::string serialize_layout(const ScreenState& state) {
  std::string out = "# app=" + state.app_id + " screen=" + state.screen_id +
                    " scroll=" + std::to_string(state.scroll_offset) + "\n";
  for (const auto& w : state.widgets) {
    out += "[" + std::to_string(w.element_id) + "] ";
    out += to_string(w.kind);
    out += " " + text::quote(w.text) + " ";
    out += w.interactive ? "interactive" : "static";
    out += "\n";
  }
  return out;
}

std::string layout_digest(const ScreenState& state) {
  return text::hex64(text::fnv1a(serialize_layout(state)));
}

}  // namespace steward
