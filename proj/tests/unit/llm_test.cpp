#include <deque>
#include <sstream>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "helpers.hpp"
#include "steward/bench.hpp"
#include "steward/error.hpp"
#include "steward/llm.hpp"
#include "steward/oracle.hpp"

namespace steward {
namespace {

using nlohmann::json;
using testing::registry;

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::kIo;  // sentinel: nothing thrown
}

// ---- parsers ---------------------------------------------------------------

TEST(LlmParse, Schedule) {
  auto p = parse_schedule_reply(
      "THOUGHT: three apps\n"
      "- TASK: t1 | Expedia | search a flight\n"
      "TASK: t2 | clock | set an alarm for {arrival_time}\n"
      "edge: t1 -> t2 | {arrival_time}\n"
      "noise without tag\n");
  EXPECT_EQ(p.thought, "three apps");
  ASSERT_EQ(p.plan.nodes.size(), 2u);
  EXPECT_EQ(p.plan.nodes[0].task.app_id, "expedia");
  EXPECT_EQ(p.plan.nodes[0].staff_id, "expedia");
  EXPECT_EQ(p.plan.nodes[1].task.placeholders, std::vector<std::string>{"arrival_time"});
  ASSERT_EQ(p.plan.edges.size(), 1u);
  EXPECT_EQ(p.plan.edges[0], (GraphEdge{"t1", "t2", "arrival_time"}));
  EXPECT_EQ(kind_of([] { parse_schedule_reply("THOUGHT: nothing"); }), ErrorKind::kParse);
  EXPECT_EQ(kind_of([] { parse_schedule_reply("TASK: t1 | clock"); }), ErrorKind::kParse);
  EXPECT_EQ(kind_of([] { parse_schedule_reply("TASK: t1 | clock | x\nEDGE: t1 t2 | y"); }), ErrorKind::kParse);
}

TEST(LlmParse, PredictIsLenient) {
  EXPECT_EQ(*parse_predict_reply("ACTION: click 3").action, Action::click(3));
  EXPECT_EQ(*parse_predict_reply("THOUGHT: hm\nACTION: click(3).").action, Action::click(3));
  EXPECT_EQ(*parse_predict_reply("action: Finish").action, Action::finish());
  EXPECT_EQ(*parse_predict_reply("ACTION: input \"London\"").action, Action::input("London"));
  EXPECT_EQ(*parse_predict_reply("ACTION: swipe(down)").action, Action::swipe(SwipeDirection::kDown));
  EXPECT_EQ(parse_predict_reply("THOUGHT: x\nACTION: back").thought, "x");
  EXPECT_EQ(kind_of([] { parse_predict_reply("ACTION: tap the button"); }), ErrorKind::kParse);
  EXPECT_EQ(kind_of([] { parse_predict_reply("I would click 3"); }), ErrorKind::kParse);
}

TEST(LlmParse, RemainingKinds) {
  auto plan = parse_plan_reply("STEP: open\nSTEP: type\nSOURCE: notes-0001");
  EXPECT_EQ(plan.steps.size(), 2u);
  EXPECT_EQ(plan.sources, std::vector<std::string>{"notes-0001"});
  EXPECT_EQ(kind_of([] { parse_plan_reply("SOURCE: x"); }), ErrorKind::kParse);

  auto s = parse_summary_reply("RECAP: clicked\nRESULT: opened: the list\nELEMENT: button");
  EXPECT_EQ(s.result, "opened: the list");
  EXPECT_EQ(kind_of([] { parse_summary_reply("nothing"); }), ErrorKind::kParse);

  EXPECT_EQ(parse_evaluation_reply("VERDICT: Success\nRATIONALE: ok").verdict, Verdict::kSuccess);
  EXPECT_EQ(parse_evaluation_reply("VERDICT: ERROR").verdict, Verdict::kError);
  EXPECT_EQ(kind_of([] { parse_evaluation_reply("VERDICT: maybe"); }), ErrorKind::kParse);

  auto tip = parse_reflection_reply("DIAGNOSIS: wrong screen\nSUGGESTION: go back");
  EXPECT_EQ(tip.suggestion, "go back");
  EXPECT_EQ(kind_of([] { parse_reflection_reply("DIAGNOSIS: only"); }), ErrorKind::kParse);

  auto x = parse_extract_reply("RESULT: arrival_time | 6:30 p.m.\nEXPERTISE: search flights\nGUIDELINE: click:Flights",
                               "expedia", "t1");
  ASSERT_EQ(x.results.size(), 1u);
  EXPECT_EQ(x.results[0], (ResultInfo{"t1", "arrival_time", "6:30 p.m."}));
  EXPECT_EQ(x.expertise.capability, "search flights");
  EXPECT_EQ(x.guideline.steps, std::vector<std::string>{"click:Flights"});
  EXPECT_EQ(kind_of([] { parse_extract_reply("nothing", "a", "t"); }), ErrorKind::kParse);

  EXPECT_EQ(parse_adjust_reply("TASK: set an alarm for 6:30 p.m."), "set an alarm for 6:30 p.m.");
  EXPECT_TRUE(parse_expertise_reply("NOVEL: yes\nREASON: new").novel);
  EXPECT_FALSE(parse_expertise_reply("NOVEL: No").novel);
  EXPECT_EQ(kind_of([] { parse_expertise_reply("NOVEL: perhaps"); }), ErrorKind::kParse);
}

// ---- backend over a scripted transport --------------------------------------

class ScriptedTransport : public Transport {
 public:
  struct Shared {
    std::deque<std::function<ChatResponse(const ChatRequest&)>> script;
    std::vector<ChatRequest> requests;
  };
  explicit ScriptedTransport(std::shared_ptr<Shared> s) : s_(std::move(s)) {}
  ChatResponse complete(const ChatRequest& r) override {
    s_->requests.push_back(r);
    if (s_->script.empty()) throw BackendError(ErrorKind::kTransport, "script exhausted");
    auto f = std::move(s_->script.front());
    s_->script.pop_front();
    return f(r);
  }

 private:
  std::shared_ptr<Shared> s_;
};

std::function<ChatResponse(const ChatRequest&)> reply(std::string content, long p = 10, long c = 5) {
  return [=](const ChatRequest&) { return ChatResponse{content, p, c}; };
}

std::function<ChatResponse(const ChatRequest&)> fail(ErrorKind k) {
  return [=](const ChatRequest&) -> ChatResponse { throw BackendError(k, "scripted failure"); };
}

struct Harness {
  std::shared_ptr<ScriptedTransport::Shared> shared = std::make_shared<ScriptedTransport::Shared>();
  std::vector<std::chrono::milliseconds> sleeps;
  std::unique_ptr<LlmBackend> backend;
  Harness() {
    backend = std::make_unique<LlmBackend>(std::make_unique<ScriptedTransport>(shared), LlmConfig{}, registry(),
                                           [this](std::chrono::milliseconds d) { sleeps.push_back(d); });
  }
};

Task clock_task() { return {"t2", "clock", "set an alarm for 6:30 p.m.", {}}; }

TEST(LlmBackend, MessagesCarryRoleShotsAndBody) {
  Harness h;
  h.shared->script.push_back(reply("ACTION: finish"));
  StaffContext ctx;
  ctx.task = clock_task();
  DeviceEnv env(registry());
  auto r = h.backend->predict({ctx, env.get_state(), {}, ""});
  EXPECT_EQ(*r.action, Action::finish());
  ASSERT_EQ(h.shared->requests.size(), 1u);
  const auto& req = h.shared->requests[0];
  EXPECT_EQ(req.model, "gpt-4o");
  EXPECT_EQ(req.temperature, 0.0);
  const auto& tmpl = prompt_template("predict");
  ASSERT_EQ(req.messages.size(), 2 + 2 * tmpl.shots.size());
  EXPECT_EQ(req.messages.front().role, "system");
  EXPECT_NE(req.messages.front().content.find("Clock"), std::string::npos);
  EXPECT_NE(req.messages.front().content.find(tmpl.output_schema), std::string::npos);
  EXPECT_EQ(req.messages.back().role, "user");
  EXPECT_NE(req.messages.back().content.find("set an alarm for 6:30 p.m."), std::string::npos);
}

TEST(LlmBackend, ShotCountsPerTemplate) {
  std::map<std::string, std::size_t> want{{"schedule", 2}, {"plan", 0},    {"predict", 0},
                                          {"summarize", 0}, {"evaluate", 2}, {"reflect", 2},
                                          {"extract", 2},  {"adjust", 2},   {"expertise", 2}};
  ASSERT_EQ(prompt_kinds().size(), 9u);
  for (const auto& k : prompt_kinds()) {
    EXPECT_EQ(prompt_template(k).shots.size(), want.at(k)) << k;
    EXPECT_FALSE(prompt_template(k).output_schema.empty()) << k;
  }
  EXPECT_EQ(kind_of([] { prompt_template("bogus"); }), ErrorKind::kConfig);
}

TEST(LlmBackend, OneRepairRoundThenParseError) {
  Harness h;
  h.shared->script.push_back(reply("I think it worked"));
  h.shared->script.push_back(reply("VERDICT: SUCCESS\nRATIONALE: alarm listed"));
  ExecutionHistory hist;
  auto e = h.backend->evaluate({clock_task(), "i1", hist});
  EXPECT_EQ(e.verdict, Verdict::kSuccess);
  ASSERT_EQ(h.shared->requests.size(), 2u);
  const auto& second = h.shared->requests[1].messages;
  EXPECT_EQ(second[second.size() - 2].role, "assistant");
  EXPECT_EQ(second[second.size() - 2].content, "I think it worked");
  EXPECT_NE(second.back().content.find(prompt_template("evaluate").output_schema), std::string::npos);

  h.shared->script.push_back(reply("nope"));
  h.shared->script.push_back(reply("still nope"));
  EXPECT_EQ(kind_of([&] { h.backend->evaluate({clock_task(), "i1", hist}); }), ErrorKind::kParse);
  EXPECT_EQ(h.shared->requests.size(), 4u);
}

TEST(LlmBackend, TransportRetriesWithBackoff) {
  Harness h;
  h.shared->script = {fail(ErrorKind::kTransport), fail(ErrorKind::kTransport), reply("TASK: done")};
  ResultInfo r{"t1", "x", "v"};
  Task t{"t2", "clock", "alarm {x}", {"x"}};
  EXPECT_EQ(h.backend->adjust({t, r}), "done");
  EXPECT_EQ(h.sleeps, (std::vector<std::chrono::milliseconds>{std::chrono::milliseconds(500),
                                                               std::chrono::milliseconds(1000)}));

  h.sleeps.clear();
  h.shared->script = {fail(ErrorKind::kTransport), fail(ErrorKind::kTransport), fail(ErrorKind::kTransport),
                      reply("TASK: unused")};
  EXPECT_EQ(kind_of([&] { h.backend->adjust({t, r}); }), ErrorKind::kTransport);
  EXPECT_EQ(h.sleeps.size(), 2u);
  EXPECT_EQ(h.shared->script.size(), 1u);

  // A malformed completion body is not a transient failure.
  h.sleeps.clear();
  h.shared->script = {fail(ErrorKind::kParse)};
  EXPECT_EQ(kind_of([&] { h.backend->adjust({t, r}); }), ErrorKind::kParse);
  EXPECT_TRUE(h.sleeps.empty());
}

TEST(LlmBackend, BackoffIsCapped) {
  LlmConfig c;
  EXPECT_EQ(backoff_delay(c, 1).count(), 500);
  EXPECT_EQ(backoff_delay(c, 2).count(), 1000);
  EXPECT_EQ(backoff_delay(c, 4).count(), 4000);
  EXPECT_EQ(backoff_delay(c, 5).count(), 8000);
  EXPECT_EQ(backoff_delay(c, 12).count(), 8000);
}

TEST(LlmBackend, UsageMatchesLedger) {
  Harness h;
  h.shared->script = {reply("NOVEL: yes", 100, 3), reply("garbage", 7, 1), reply("NOVEL: no", 8, 2)};
  ExpertiseEntry cur{"clock", "alarms", {}};
  ExpertiseCandidate cand{"clock", "set alarms"};
  EXPECT_TRUE(h.backend->expertise_decision({cur, cand}).novel);
  EXPECT_FALSE(h.backend->expertise_decision({cur, cand}).novel);
  long sum = 0;
  for (const auto& e : h.backend->ledger()) sum += e.prompt_tokens + e.completion_tokens;
  EXPECT_EQ(h.backend->ledger().size(), 3u);
  EXPECT_EQ(sum, 121);
  EXPECT_EQ(h.backend->usage().total(), sum);
  auto ex = h.backend->drain_exchanges();
  EXPECT_EQ(ex.size(), 3u);
  EXPECT_TRUE(h.backend->drain_exchanges().empty());
}

TEST(LlmConfigTest, CredentialAndValidation) {
  LlmConfig c;
  c.api_key_env = "STEWARD_TEST_UNSET_VARIABLE";
  EXPECT_EQ(kind_of([&] { c.api_key(); }), ErrorKind::kConfig);
  ::setenv("STEWARD_TEST_KEY", "sk-test", 1);
  c.api_key_env = "STEWARD_TEST_KEY";
  EXPECT_EQ(c.api_key(), "sk-test");
  c.timeout_s = 0;
  EXPECT_EQ(kind_of([&] { c.validate(); }), ErrorKind::kConfig);
  ::setenv("STEWARD_LLM_MODEL", "local-model", 1);
  EXPECT_EQ(LlmConfig::from_env().model, "local-model");
  ::unsetenv("STEWARD_LLM_MODEL");
}

// ---- real HTTP against a local server ----------------------------------------

class LocalServer {
 public:
  LocalServer() {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      auth_ = req.get_header_value("Authorization");
      body_ = json::parse(req.body);
      if (body_["model"] == "fail") {
        res.status = 503;
        return;
      }
      if (body_["model"] == "garbled") {
        res.set_content("{not json", "application/json");
        return;
      }
      json out{{"choices", {{{"message", {{"role", "assistant"}, {"content", "ACTION: back"}}}}}},
               {"usage", {{"prompt_tokens", 42}, {"completion_tokens", 3}}}};
      res.set_content(out.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~LocalServer() {
    server_.stop();
    thread_.join();
  }
  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions"; }

  std::string auth_;
  json body_;

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

TEST(HttpTransportTest, PostsChatCompletion) {
  LocalServer srv;
  HttpTransport t(srv.endpoint(), "sk-local", std::chrono::seconds(5));
  ChatRequest req{"m1", {{"system", "be terse"}, {"user", "go"}}, 0.0};
  auto r = t.complete(req);
  EXPECT_EQ(r.content, "ACTION: back");
  EXPECT_EQ(r.prompt_tokens, 42);
  EXPECT_EQ(r.completion_tokens, 3);
  EXPECT_EQ(srv.auth_, "Bearer sk-local");
  EXPECT_EQ(srv.body_["model"], "m1");
  EXPECT_EQ(srv.body_["temperature"], 0.0);
  EXPECT_EQ(srv.body_["messages"].size(), 2u);
  EXPECT_EQ(srv.body_["messages"][1]["content"], "go");

  req.model = "fail";
  EXPECT_EQ(kind_of([&] { t.complete(req); }), ErrorKind::kTransport);
  req.model = "garbled";
  EXPECT_EQ(kind_of([&] { t.complete(req); }), ErrorKind::kParse);
}

TEST(HttpTransportTest, UnreachableEndpointIsTransportError) {
  int port;
  {
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }
  HttpTransport t("http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions", "k", std::chrono::seconds(2));
  EXPECT_EQ(kind_of([&] { t.complete({"m", {{"user", "x"}}, 0.0}); }), ErrorKind::kTransport);
}

// ---- structural equivalence with the oracle -----------------------------------

// Forwards to the oracle and renders each answer in the reply format the LLM
// backend expects, so the same run can be replayed through LlmBackend.
class Scribe : public AgentBackend {
 public:
  Scribe(OracleBackend& inner, std::deque<std::string>& out) : inner_(inner), out_(out) {}
  std::string name() const override { return "scribe"; }
  std::string config_digest() const override { return "0"; }

  SchedulingProposal schedule(const ScheduleQuery& q) override {
    auto p = inner_.schedule(q);
    std::string s = "THOUGHT: " + p.thought + "\n";
    for (const auto& n : p.plan.nodes) s += "TASK: " + n.task.task_id + " | " + n.task.app_id + " | " + n.task.description + "\n";
    for (const auto& e : p.plan.edges) s += "EDGE: " + e.from + " -> " + e.to + " | " + e.label + "\n";
    out_.push_back(s);
    return p;
  }
  TaskPlan plan(const PlanQuery& q) override {
    auto p = inner_.plan(q);
    std::string s;
    for (const auto& st : p.steps) s += "STEP: " + st + "\n";
    if (p.steps.empty()) s += "STEP: follow the task\n";
    for (const auto& src : p.sources) s += "SOURCE: " + src + "\n";
    out_.push_back(s);
    return p;
  }
  PredictReply predict(const PredictQuery& q) override {
    auto r = inner_.predict(q);
    out_.push_back("THOUGHT: " + r.thought + "\nACTION: " + r.action->to_string());
    return r;
  }
  StepSummary summarize(const SummarizeQuery& q) override {
    auto s = inner_.summarize(q);
    out_.push_back("RECAP: " + s.action_recap + "\nRESULT: " + s.result + "\nELEMENT: " + s.element_note);
    return s;
  }
  Evaluation evaluate(const EvaluateQuery& q) override {
    auto e = inner_.evaluate(q);
    out_.push_back("VERDICT: " + std::string(to_string(e.verdict)) + "\nRATIONALE: " + e.rationale);
    return e;
  }
  ReflectionTip reflect(const ReflectQuery& q) override {
    auto t = inner_.reflect(q);
    out_.push_back("DIAGNOSIS: " + t.diagnosis + "\nSUGGESTION: " + t.suggestion);
    return t;
  }
  ExtractedExperience extract(const ExtractQuery& q) override {
    auto x = inner_.extract(q);
    std::string s;
    for (const auto& r : x.results) s += "RESULT: " + r.info_label + " | " + r.value + "\n";
    if (!x.expertise.capability.empty()) s += "EXPERTISE: " + x.expertise.capability + "\n";
    for (const auto& g : x.guideline.steps) s += "GUIDELINE: " + g + "\n";
    out_.push_back(s);
    return x;
  }
  std::string adjust(const AdjustQuery& q) override {
    auto a = inner_.adjust(q);
    out_.push_back("TASK: " + a);
    return a;
  }
  ExpertiseVerdict expertise_decision(const ExpertiseQuery& q) override {
    auto v = inner_.expertise_decision(q);
    out_.push_back(std::string("NOVEL: ") + (v.novel ? "yes" : "no") + "\nREASON: " + v.reason);
    return v;
  }

 private:
  OracleBackend& inner_;
  std::deque<std::string>& out_;
};

std::vector<std::string> kinds(const std::string& trace) {
  std::vector<std::string> out;
  std::istringstream in(trace);
  std::string line;
  while (std::getline(in, line)) out.push_back(json::parse(line)["kind"].get<std::string>());
  return out;
}

TEST(LlmBackend, TraceStructureMatchesOracleRun) {
  auto suite = load_suite(default_data_dir() / "fixtures" / "flight_alarm_note.json");
  const auto& instr = suite[0].instruction;
  auto probe = [&](const DeviceEnv& e) { return check_goals(e, suite[0].truth); };
  for (auto fault : {FaultPolicy{}, FaultPolicy{FaultMode::kWrongActionOnce, 1, 2, 0}}) {
    OracleBackend oracle(std::make_shared<ScriptDb>(suite), fault);
    std::deque<std::string> replies;
    Scribe scribe(oracle, replies);
    std::ostringstream a_out, b_out;
    TraceWriter a_trace(a_out), b_trace(b_out);
    MemoryStore mem_a(*registry()), mem_b(*registry());
    DeviceEnv env_a(registry()), env_b(registry());
    auto ra = run_instruction(instr, env_a, {}, mem_a, scribe, &a_trace, probe);

    Harness h;
    std::size_t n = replies.size();
    for (auto& r : replies) h.shared->script.push_back(reply(r, static_cast<long>(r.size()), 1));
    auto rb = run_instruction(instr, env_b, {}, mem_b, *h.backend, &b_trace, probe);

    EXPECT_EQ(kinds(a_out.str()), kinds(b_out.str()));
    EXPECT_EQ(h.shared->requests.size(), n);
    EXPECT_TRUE(h.shared->script.empty());
    EXPECT_EQ(ra.success, rb.success);
    EXPECT_EQ(ra.goals_met, rb.goals_met);
    EXPECT_EQ(ra.apps_touched, rb.apps_touched);
    EXPECT_EQ(ra.total_actions, rb.total_actions);
    EXPECT_EQ(env_a, env_b);
    long ledger = 0;
    for (const auto& e : h.backend->ledger()) ledger += e.prompt_tokens + e.completion_tokens;
    EXPECT_EQ(rb.tokens, ledger);
    EXPECT_GT(rb.tokens, 0);
    EXPECT_EQ(ra.tokens, 0);
    // The credential never reaches the trace or the exchange log.
    EXPECT_EQ(b_out.str().find("Bearer"), std::string::npos);
  }
}

}  // namespace
}  // namespace steward
