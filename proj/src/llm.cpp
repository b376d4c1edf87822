#include "steward/llm.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "steward/error.hpp"
#include "steward/layout.hpp"
#include "steward/text.hpp"

namespace steward {

using nlohmann::json;

// ---- transport ------------------------------------------------------------

HttpTransport::HttpTransport(std::string endpoint, std::string api_key, std::chrono::seconds timeout)
    : api_key_(std::move(api_key)), timeout_(timeout) {
  auto scheme_end = endpoint.find("://");
  if (scheme_end == std::string::npos) throw Error(ErrorKind::kConfig, "endpoint needs a scheme: " + endpoint);
  auto path_start = endpoint.find('/', scheme_end + 3);
  origin_ = endpoint.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : endpoint.substr(path_start);
}

ChatResponse HttpTransport::complete(const ChatRequest& request) {
  json body = {{"model", request.model}, {"temperature", request.temperature}, {"messages", json::array()}};
  for (const auto& m : request.messages) body["messages"].push_back({{"role", m.role}, {"content", m.content}});

  httplib::Client cli(origin_);
  cli.set_connection_timeout(timeout_);
  cli.set_read_timeout(timeout_);
  cli.set_write_timeout(timeout_);
  httplib::Headers headers = {{"Authorization", "Bearer " + api_key_}};
  auto res = cli.Post(path_, headers, body.dump(), "application/json");
  if (!res) throw BackendError(ErrorKind::kTransport, "request failed: " + httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300) {
    throw BackendError(ErrorKind::kTransport, "HTTP " + std::to_string(res->status));
  }
  ChatResponse out;
  try {
    json j = json::parse(res->body);
    out.content = j.at("choices").at(0).at("message").at("content").get<std::string>();
    if (j.contains("usage")) {
      out.prompt_tokens = j["usage"].value("prompt_tokens", 0L);
      out.completion_tokens = j["usage"].value("completion_tokens", 0L);
    }
  } catch (const json::exception& e) {
    throw BackendError(ErrorKind::kParse, std::string("malformed completion body: ") + e.what());
  }
  return out;
}

// ---- config ---------------------------------------------------------------

LlmConfig LlmConfig::from_env() {
  LlmConfig c;
  if (const char* v = std::getenv("STEWARD_LLM_ENDPOINT"); v && *v) c.endpoint = v;
  if (const char* v = std::getenv("STEWARD_LLM_MODEL"); v && *v) c.model = v;
  if (const char* v = std::getenv("STEWARD_LLM_TIMEOUT"); v && *v) {
    try {
      c.timeout_s = std::stoi(v);
    } catch (const std::exception&) {
      throw Error(ErrorKind::kConfig, "STEWARD_LLM_TIMEOUT is not an integer");
    }
  }
  return c;
}

std::string LlmConfig::api_key() const {
  const char* v = std::getenv(api_key_env.c_str());
  if (!v || !*v) throw Error(ErrorKind::kConfig, "credential variable " + api_key_env + " is not set");
  return v;
}

void LlmConfig::validate() const {
  if (endpoint.empty()) throw Error(ErrorKind::kConfig, "empty endpoint");
  if (model.empty()) throw Error(ErrorKind::kConfig, "empty model name");
  if (timeout_s < 1) throw Error(ErrorKind::kConfig, "timeout must be at least 1 s");
  if (max_attempts < 1) throw Error(ErrorKind::kConfig, "max_attempts must be at least 1");
}

std::chrono::milliseconds backoff_delay(const LlmConfig& cfg, int retry) {
  auto d = cfg.backoff_base;
  for (int i = 1; i < retry && d < cfg.backoff_cap; ++i) d *= 2;
  return std::min(d, cfg.backoff_cap);
}

// ---- reply parsing --------------------------------------------------------

namespace {

using Tagged = std::vector<std::pair<std::string, std::string>>;

// "TAG: value" lines; tags are upper-cased letters and underscores.
Tagged tagged_lines(const std::string& reply) {
  Tagged out;
  for (auto line : text::split(reply, '\n')) {
    line = text::trim(line);
    while (!line.empty() && (line[0] == '-' || line[0] == '*')) line = text::trim(line.substr(1));
    auto colon = line.find(':');
    if (colon == std::string::npos || colon == 0) continue;
    std::string tag = line.substr(0, colon);
    bool ok = std::all_of(tag.begin(), tag.end(), [](unsigned char c) { return std::isalpha(c) || c == '_'; });
    if (!ok) continue;
    for (auto& c : tag) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    out.emplace_back(tag, text::trim(line.substr(colon + 1)));
  }
  return out;
}

std::vector<std::string> all_of_tag(const Tagged& t, const std::string& tag) {
  std::vector<std::string> out;
  for (const auto& [k, v] : t) {
    if (k == tag) out.push_back(v);
  }
  return out;
}

std::optional<std::string> first_of_tag(const Tagged& t, const std::string& tag) {
  for (const auto& [k, v] : t) {
    if (k == tag) return v;
  }
  return std::nullopt;
}

[[noreturn]] void parse_fail(const std::string& why) { throw BackendError(ErrorKind::kParse, why); }

std::string require(const Tagged& t, const std::string& tag) {
  auto v = first_of_tag(t, tag);
  if (!v || v->empty()) parse_fail("missing " + tag + " line");
  return *v;
}

std::vector<std::string> split_bar(const std::string& s, std::size_t max_parts) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (parts.size() + 1 < max_parts) {
    auto bar = s.find('|', start);
    if (bar == std::string::npos) break;
    parts.push_back(text::trim(s.substr(start, bar - start)));
    start = bar + 1;
  }
  parts.push_back(text::trim(s.substr(start)));
  return parts;
}

std::optional<Action> lenient_action(std::string s) {
  s = text::trim(s);
  if (!s.empty() && s.back() == '.') s.pop_back();
  if (auto a = Action::parse(s)) return a;
  // click(3), swipe(down), input("x")
  auto open = s.find('(');
  if (open != std::string::npos && s.back() == ')') {
    std::string alt = s.substr(0, open) + " " + s.substr(open + 1, s.size() - open - 2);
    if (auto a = Action::parse(text::trim(alt))) return a;
  }
  std::string low = text::lower(s);
  if (low == "back" || low == "finish") return Action::parse(low);
  return std::nullopt;
}

}  // namespace

SchedulingProposal parse_schedule_reply(const std::string& reply) {
  Tagged t = tagged_lines(reply);
  SchedulingProposal p;
  p.thought = first_of_tag(t, "THOUGHT").value_or("");
  for (const auto& line : all_of_tag(t, "TASK")) {
    auto parts = split_bar(line, 3);
    if (parts.size() != 3 || parts[0].empty() || parts[1].empty() || parts[2].empty()) {
      parse_fail("TASK line needs 'id | app | description': " + line);
    }
    Task task{parts[0], text::lower(parts[1]), parts[2], {}};
    task.placeholders = placeholders_in(task.description);
    p.plan.nodes.push_back({task, task.app_id});
  }
  for (const auto& line : all_of_tag(t, "EDGE")) {
    auto parts = split_bar(line, 2);
    auto arrow = parts[0].find("->");
    if (parts.size() != 2 || arrow == std::string::npos || parts[1].empty()) {
      parse_fail("EDGE line needs 'from -> to | label': " + line);
    }
    std::string label = parts[1];
    if (label.size() > 2 && label.front() == '{' && label.back() == '}') label = label.substr(1, label.size() - 2);
    p.plan.edges.push_back({text::trim(parts[0].substr(0, arrow)), text::trim(parts[0].substr(arrow + 2)), label});
  }
  if (p.plan.nodes.empty()) parse_fail("no TASK lines");
  return p;
}

TaskPlan parse_plan_reply(const std::string& reply) {
  Tagged t = tagged_lines(reply);
  TaskPlan p;
  p.steps = all_of_tag(t, "STEP");
  p.sources = all_of_tag(t, "SOURCE");
  if (p.steps.empty()) parse_fail("no STEP lines");
  return p;
}

PredictReply parse_predict_reply(const std::string& reply) {
  Tagged t = tagged_lines(reply);
  PredictReply r;
  r.thought = first_of_tag(t, "THOUGHT").value_or("");
  std::string raw = require(t, "ACTION");
  r.action = lenient_action(raw);
  if (!r.action) parse_fail("ACTION is not one of the allowed forms: " + raw);
  return r;
}

StepSummary parse_summary_reply(const std::string& reply) {
  Tagged t = tagged_lines(reply);
  StepSummary s{first_of_tag(t, "RECAP").value_or(""), first_of_tag(t, "RESULT").value_or(""),
                first_of_tag(t, "ELEMENT").value_or("")};
  if (s.action_recap.empty() && s.result.empty() && s.element_note.empty()) parse_fail("no RECAP/RESULT/ELEMENT");
  return s;
}

Evaluation parse_evaluation_reply(const std::string& reply) {
  Tagged t = tagged_lines(reply);
  std::string v = text::lower(require(t, "VERDICT"));
  Evaluation e;
  if (text::starts_with(v, "success")) {
    e.verdict = Verdict::kSuccess;
  } else if (text::starts_with(v, "error")) {
    e.verdict = Verdict::kError;
  } else {
    parse_fail("VERDICT must be SUCCESS or ERROR");
  }
  e.rationale = first_of_tag(t, "RATIONALE").value_or("");
  return e;
}

ReflectionTip parse_reflection_reply(const std::string& reply) {
  Tagged t = tagged_lines(reply);
  ReflectionTip tip;
  tip.suggestion = require(t, "SUGGESTION");
  tip.diagnosis = first_of_tag(t, "DIAGNOSIS").value_or("");
  return tip;
}

ExtractedExperience parse_extract_reply(const std::string& reply, const std::string& app_id,
                                        const std::string& task_id) {
  Tagged t = tagged_lines(reply);
  ExtractedExperience x;
  for (const auto& line : all_of_tag(t, "RESULT")) {
    auto parts = split_bar(line, 2);
    if (parts.size() != 2 || parts[0].empty()) parse_fail("RESULT line needs 'label | value': " + line);
    x.results.push_back({task_id, parts[0], parts[1]});
  }
  x.expertise = {app_id, first_of_tag(t, "EXPERTISE").value_or("")};
  x.guideline = {app_id, all_of_tag(t, "GUIDELINE")};
  if (x.results.empty() && x.expertise.capability.empty() && x.guideline.steps.empty()) {
    parse_fail("no RESULT/EXPERTISE/GUIDELINE lines");
  }
  return x;
}

std::string parse_adjust_reply(const std::string& reply) { return require(tagged_lines(reply), "TASK"); }

ExpertiseVerdict parse_expertise_reply(const std::string& reply) {
  Tagged t = tagged_lines(reply);
  std::string v = text::lower(require(t, "NOVEL"));
  ExpertiseVerdict out;
  if (text::starts_with(v, "yes") || v == "true") {
    out.novel = true;
  } else if (text::starts_with(v, "no") || v == "false") {
    out.novel = false;
  } else {
    parse_fail("NOVEL must be yes or no");
  }
  out.reason = first_of_tag(t, "REASON").value_or("");
  return out;
}

// ---- backend --------------------------------------------------------------

LlmBackend::LlmBackend(std::unique_ptr<Transport> transport, LlmConfig cfg,
                       std::shared_ptr<const AppRegistry> registry, SleepFn sleep)
    : transport_(std::move(transport)), cfg_(std::move(cfg)), registry_(std::move(registry)), sleep_(std::move(sleep)) {
  cfg_.validate();
  if (!transport_) throw Error(ErrorKind::kConfig, "no transport");
  if (!sleep_) sleep_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

std::string LlmBackend::config_digest() const {
  return text::hex64(text::fnv1a(cfg_.endpoint + "|" + cfg_.model + "|t=0|timeout=" + std::to_string(cfg_.timeout_s)));
}

std::vector<Exchange> LlmBackend::drain_exchanges() {
  std::vector<Exchange> out;
  out.swap(exchanges_);
  return out;
}

std::vector<ChatMessage> LlmBackend::build_messages(const std::string& kind, const std::string& app_id,
                                                    const std::string& body) const {
  const PromptTemplate& tmpl = prompt_template(kind);
  std::map<std::string, std::string> b;
  if (registry_ && !app_id.empty()) {
    if (const MockApp* app = registry_->find(app_id)) {
      b["app_name"] = app->name;
      b["app_description"] = app->description;
    }
  }
  if (!b.count("app_name")) {
    b["app_name"] = app_id.empty() ? "phone" : app_id;
    b["app_description"] = "";
  }
  std::vector<ChatMessage> msgs;
  msgs.push_back({"system", text::interpolate(tmpl.role_preamble, b) + "\n\nReply in exactly this format:\n" +
                                tmpl.output_schema});
  for (const auto& shot : tmpl.shots) {
    msgs.push_back({"user", shot.input});
    msgs.push_back({"assistant", shot.output});
  }
  msgs.push_back({"user", body});
  return msgs;
}

ChatResponse LlmBackend::send(const std::string& kind, const ChatRequest& req) {
  for (int attempt = 1;; ++attempt) {
    try {
      ChatResponse r = transport_->complete(req);
      usage_.prompt += r.prompt_tokens;
      usage_.completion += r.completion_tokens;
      ledger_.push_back({kind, r.prompt_tokens, r.completion_tokens});
      json request = json::array();
      for (const auto& m : req.messages) request.push_back({{"role", m.role}, {"content", m.content}});
      exchanges_.push_back({kind, request.dump(), r.content});
      return r;
    } catch (const BackendError& e) {
      if (e.kind() != ErrorKind::kTransport || attempt >= cfg_.max_attempts) throw;
      sleep_(backoff_delay(cfg_, attempt));
    }
  }
}

template <typename T>
T LlmBackend::ask(const std::string& kind, const std::string& app_id, const std::string& body,
                  const std::function<T(const std::string&)>& parse) {
  ChatRequest req{cfg_.model, build_messages(kind, app_id, body), 0.0};
  ChatResponse r = send(kind, req);
  try {
    return parse(r.content);
  } catch (const BackendError& e) {
    if (e.kind() != ErrorKind::kParse) throw;
    req.messages.push_back({"assistant", r.content});
    req.messages.push_back({"user", std::string("Your reply could not be used (") + e.what() +
                                         "). Answer again using only this format:\n" +
                                         prompt_template(kind).output_schema});
  }
  return parse(send(kind, req).content);
}

namespace {

std::string history_block(const std::vector<HistoryTriple>& h) {
  std::string s;
  for (std::size_t i = 0; i < h.size(); ++i) s += std::to_string(i + 1) + ". " + h[i].key + "\n";
  return s.empty() ? "(none)\n" : s;
}

std::string final_screen(const ExecutionHistory& h) {
  return h.triples.empty() ? "(none)\n" : serialize_layout(h.triples.back().state);
}

}  // namespace

SchedulingProposal LlmBackend::schedule(const ScheduleQuery& q) {
  std::string body = "INSTRUCTION: " + q.instruction.text + "\nAPPS:\n";
  for (const auto& e : q.expertise) {
    body += "- " + e.app_id + ": " + e.description;
    if (!e.expertise.empty()) body += " Known tasks: " + text::join(e.expertise, "; ") + ".";
    body += "\n";
  }
  if (!q.correction.empty()) {
    body += "Your previous proposal was rejected:\n";
    for (const auto& c : q.correction) body += "- " + c + "\n";
  }
  return ask<SchedulingProposal>("schedule", "", body, parse_schedule_reply);
}

TaskPlan LlmBackend::plan(const PlanQuery& q) {
  std::string body = "TASK: " + q.task.description + "\nGUIDELINES:\n";
  for (const auto& g : q.guidelines) body += "[" + g.entry_id + "] " + g.task_text + ": " + text::join(g.steps, "; ") + "\n";
  if (q.guidelines.empty()) body += "(none)\n";
  return ask<TaskPlan>("plan", q.task.app_id, body, parse_plan_reply);
}

PredictReply LlmBackend::predict(const PredictQuery& q) {
  const StaffContext& c = q.ctx;
  std::string body = "TASK: " + c.task.description + "\n";
  if (!c.plan.steps.empty()) body += "PLAN:\n- " + text::join(c.plan.steps, "\n- ") + "\n";
  if (!c.received_results.empty()) {
    body += "RECEIVED:\n";
    for (const auto& r : c.received_results) body += "- " + r.info_label + " = " + r.value + "\n";
  }
  if (c.reflection_tip) body += "TIP: " + c.reflection_tip->suggestion + "\n";
  if (c.last_summary) {
    body += "LAST STEP: " + c.last_summary->action_recap + " / " + c.last_summary->result + " / " +
            c.last_summary->element_note + "\n";
  }
  body += "HISTORY:\n" + history_block(q.history) + "SCREEN:\n" + serialize_layout(q.state);
  if (!q.correction.empty()) body += "Your previous answer was rejected: " + q.correction + "\n";
  return ask<PredictReply>("predict", c.task.app_id, body, parse_predict_reply);
}

StepSummary LlmBackend::summarize(const SummarizeQuery& q) {
  std::string body = "TASK: " + q.task.description + "\nSCREEN BEFORE:\n" + serialize_layout(q.state) +
                     "ACTION: " + q.action.to_string() + "\nOUTCOME: " + q.outcome.note + "\n";
  return ask<StepSummary>("summarize", q.task.app_id, body, parse_summary_reply);
}

Evaluation LlmBackend::evaluate(const EvaluateQuery& q) {
  std::string body = "TASK: " + q.task.description + "\nHISTORY:\n" + history_block(q.history.triples) +
                     "FINAL SCREEN:\n" + final_screen(q.history);
  return ask<Evaluation>("evaluate", "", body, parse_evaluation_reply);
}

ReflectionTip LlmBackend::reflect(const ReflectQuery& q) {
  std::string body = "TASK: " + q.task.description + "\nVERDICT: " + std::string(to_string(q.evaluation.verdict)) +
                     ": " + q.evaluation.rationale + "\nHISTORY:\n" + history_block(q.history.triples) +
                     "FINAL SCREEN:\n" + final_screen(q.history);
  return ask<ReflectionTip>("reflect", "", body, parse_reflection_reply);
}

ExtractedExperience LlmBackend::extract(const ExtractQuery& q) {
  std::string body = "TASK: " + q.task.description + "\nNEEDED: " + text::join(q.outbound_labels, ", ") +
                     "\nHISTORY:\n" + history_block(q.history.triples) + "SEEN TEXT:\n";
  std::set<std::string> seen;
  for (const auto& t : q.history.triples) {
    for (const auto& w : t.state.widgets) {
      if (seen.insert(w.text).second) body += w.text + "\n";
    }
  }
  const std::string app = q.task.app_id;
  const std::string id = q.task.task_id;
  return ask<ExtractedExperience>("extract", "", body,
                                  [&](const std::string& r) { return parse_extract_reply(r, app, id); });
}

std::string LlmBackend::adjust(const AdjustQuery& q) {
  std::string body = "TASK: " + q.downstream.description + "\nRESULT: " + q.result.info_label + " = " + q.result.value;
  return ask<std::string>("adjust", "", body, parse_adjust_reply);
}

ExpertiseVerdict LlmBackend::expertise_decision(const ExpertiseQuery& q) {
  std::string body = "APP: " + q.current.app_id + "\nKNOWN:\n";
  for (const auto& e : q.current.expertise) body += "- " + e + "\n";
  if (q.current.expertise.empty()) body += "(none)\n";
  body += "CANDIDATE: " + q.candidate.capability;
  return ask<ExpertiseVerdict>("expertise", "", body, parse_expertise_reply);
}

}  // namespace steward
