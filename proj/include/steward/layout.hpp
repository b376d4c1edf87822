#pragma once

#include <string>

#include "steward/screen.hpp"

namespace steward {

/// Line-oriented textual layout of a screen:
///
///   # app=<app_id> screen=<screen_id> scroll=<n>
///   [<element_id>] <kind> "<text>" interactive|static
///
/// One widget per line, in element-id order, each line newline-terminated.
/// The format is stable and golden-tested.
std::string serialize_layout(const ScreenState& state);

/// FNV-1a digest of serialize_layout(), used by traces and replay.
std::string layout_digest(const ScreenState& state);

}  // namespace steward
