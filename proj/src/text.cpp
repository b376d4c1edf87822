#include "steward/text.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>

#include "steward/error.hpp"

namespace steward {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kUnknownPredicate: return "unknown_predicate";
    case ErrorKind::kUnknownApp: return "unknown_app";
    case ErrorKind::kRegistry: return "registry";
    case ErrorKind::kUnschedulableInstruction: return "unschedulable_instruction";
    case ErrorKind::kInvalidGraph: return "invalid_graph";
    case ErrorKind::kCycle: return "cycle";
    case ErrorKind::kInvalidActionFromBackend: return "invalid_action_from_backend";
    case ErrorKind::kLabelMismatch: return "label_mismatch";
    case ErrorKind::kMissingResult: return "missing_result";
    case ErrorKind::kMissingScript: return "missing_script";
    case ErrorKind::kTransport: return "transport";
    case ErrorKind::kParse: return "parse";
    case ErrorKind::kInfeasibleMix: return "infeasible_mix";
    case ErrorKind::kMisalignedInputs: return "misaligned_inputs";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

}  // namespace steward

namespace steward::text {

namespace {
bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
char to_lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }
}  // namespace

std::vector<std::string> tokenize(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (is_alnum(c)) {
      cur.push_back(to_lower(c));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), to_lower);
  return out;
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (to_lower(a[i]) != to_lower(b[i])) return false;
  }
  return true;
}

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(s.substr(start));
      break;
    }
    out.emplace_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::optional<std::string> parse_time24(std::string_view raw) {
  std::string s = lower(trim(raw));
  std::size_t i = 0;
  auto digits = [&](int max_len) -> std::optional<int> {
    int v = 0, n = 0;
    while (i < s.size() && n < max_len && std::isdigit(static_cast<unsigned char>(s[i]))) {
      v = v * 10 + (s[i] - '0');
      ++i;
      ++n;
    }
    if (n == 0) return std::nullopt;
    return v;
  };
  auto hour = digits(2);
  if (!hour) return std::nullopt;
  int minute = 0;
  if (i < s.size() && s[i] == ':') {
    ++i;
    std::size_t before = i;
    auto m = digits(2);
    if (!m || i - before != 2) return std::nullopt;
    minute = *m;
  }
  while (i < s.size() && s[i] == ' ') ++i;
  std::string suffix;
  for (; i < s.size(); ++i) {
    if (s[i] != '.' && s[i] != ' ') suffix.push_back(s[i]);
  }
  int h = *hour;
  if (suffix == "am" || suffix == "pm") {
    if (h < 1 || h > 12) return std::nullopt;
    if (suffix == "am" && h == 12) h = 0;
    if (suffix == "pm" && h != 12) h += 12;
  } else if (!suffix.empty()) {
    return std::nullopt;
  } else if (s.find(':') == std::string::npos) {
    // a bare number is not a time
    return std::nullopt;
  }
  if (h > 23 || minute > 59) return std::nullopt;
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02d:%02d", h, minute);
  return std::string(buf);
}

std::string normalize(std::string_view value, std::string_view how) {
  if (how.empty()) return std::string(value);
  if (how == "lower") return lower(trim(value));
  if (how == "time24") {
    if (auto t = parse_time24(value)) return *t;
    return trim(value);
  }
  return std::string(value);
}

std::string interpolate(std::string_view tmpl,
                        const std::map<std::string, std::string>& bindings) {
  std::string out;
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      auto close = tmpl.find('}', i + 1);
      if (close != std::string_view::npos) {
        std::string name(tmpl.substr(i + 1, close - i - 1));
        auto it = bindings.find(name);
        if (it != bindings.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(tmpl[i]);
    ++i;
  }
  return out;
}

std::vector<std::string> slot_names(std::string_view tmpl) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while ((i = tmpl.find('{', i)) != std::string_view::npos) {
    auto close = tmpl.find('}', i + 1);
    if (close == std::string_view::npos) break;
    std::string name(tmpl.substr(i + 1, close - i - 1));
    if (!name.empty() && std::find(out.begin(), out.end(), name) == out.end()) {
      out.push_back(name);
    }
    i = close + 1;
  }
  return out;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace steward::text
