#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace steward::text {

/// Lowercase, split on non-alphanumerics. No stemming, no stopwords.
std::vector<std::string> tokenize(std::string_view s);

std::string lower(std::string_view s);
std::string trim(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
bool starts_with(std::string_view s, std::string_view prefix);
std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// Parses clock times such as "6:30 p.m.", "6:30pm", "7 a.m." or "18:30" and
/// returns "HH:MM". Returns nullopt when the text is not a recognizable time.
std::optional<std::string> parse_time24(std::string_view s);

/// Applies a named normalization: "" (identity), "lower", "time24".
/// Unparseable input is returned trimmed but otherwise untouched.
std::string normalize(std::string_view value, std::string_view how);

/// Replaces every "{name}" with bindings[name]. Unknown names are left verbatim.
std::string interpolate(std::string_view tmpl,
                        const std::map<std::string, std::string>& bindings);

/// Names of "{name}" slots, in order of first appearance.
std::vector<std::string> slot_names(std::string_view tmpl);

/// FNV-1a 64-bit.
std::uint64_t fnv1a(std::string_view s);
std::string hex64(std::uint64_t v);

std::string quote(std::string_view s);

}  // namespace steward::text
