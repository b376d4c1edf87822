#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "steward/app.hpp"
#include "steward/backend.hpp"

namespace steward {

struct ChatMessage {
  std::string role;  // system | user | assistant
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
};

struct ChatResponse {
  std::string content;
  long prompt_tokens = 0;
  long completion_tokens = 0;
};

/// One blocking chat completion. Implementations throw
/// BackendError(kTransport) on network failures, timeouts and non-2xx replies.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual ChatResponse complete(const ChatRequest& request) = 0;
};

/// OpenAI-compatible `POST <endpoint>` with a bearer credential.
class HttpTransport : public Transport {
 public:
  HttpTransport(std::string endpoint, std::string api_key, std::chrono::seconds timeout);
  ChatResponse complete(const ChatRequest& request) override;

 private:
  std::string origin_;  // scheme://host[:port]
  std::string path_;
  std::string api_key_;
  std::chrono::seconds timeout_;
};

struct LlmConfig {
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string model = "gpt-4o";
  std::string api_key_env = "STEWARD_API_KEY";
  int timeout_s = 60;
  int max_attempts = 3;  // per completion, transport failures only
  std::chrono::milliseconds backoff_base{500};
  std::chrono::milliseconds backoff_cap{8000};

  /// Defaults overridden by STEWARD_LLM_ENDPOINT, STEWARD_LLM_MODEL and
  /// STEWARD_LLM_TIMEOUT.
  static LlmConfig from_env();
  /// Value of the credential variable; throws Error(kConfig) if unset or empty.
  std::string api_key() const;
  void validate() const;
};

struct PromptShot {
  std::string input;
  std::string output;
};

struct PromptTemplate {
  std::string kind;
  std::string role_preamble;  // may reference {app_name} and {app_description}
  std::vector<PromptShot> shots;
  std::string output_schema;
};

/// The nine query kinds, in a fixed order.
const std::vector<std::string>& prompt_kinds();
/// Throws Error(kConfig) for an unknown kind.
const PromptTemplate& prompt_template(const std::string& kind);

/// Transport-level record of one completion, for cross-checking token counts.
struct LedgerEntry {
  std::string kind;
  long prompt_tokens = 0;
  long completion_tokens = 0;
};

using SleepFn = std::function<void(std::chrono::milliseconds)>;

/// Delay before retry number `retry` (1-based): base * 2^(retry-1), capped.
std::chrono::milliseconds backoff_delay(const LlmConfig& cfg, int retry);

/// Answers every query with a role-played chat completion at temperature 0.
/// Replies use a line-tagged format; an unparseable reply gets one repair
/// round-trip before BackendError(kParse) is thrown.
class LlmBackend : public AgentBackend {
 public:
  LlmBackend(std::unique_ptr<Transport> transport, LlmConfig cfg, std::shared_ptr<const AppRegistry> registry,
             SleepFn sleep = {});

  std::string name() const override { return "llm"; }
  std::string config_digest() const override;

  SchedulingProposal schedule(const ScheduleQuery& q) override;
  TaskPlan plan(const PlanQuery& q) override;
  PredictReply predict(const PredictQuery& q) override;
  StepSummary summarize(const SummarizeQuery& q) override;
  Evaluation evaluate(const EvaluateQuery& q) override;
  ReflectionTip reflect(const ReflectQuery& q) override;
  ExtractedExperience extract(const ExtractQuery& q) override;
  std::string adjust(const AdjustQuery& q) override;
  ExpertiseVerdict expertise_decision(const ExpertiseQuery& q) override;

  TokenUsage usage() const override { return usage_; }
  std::vector<Exchange> drain_exchanges() override;
  const std::vector<LedgerEntry>& ledger() const { return ledger_; }

 private:
  template <typename T>
  T ask(const std::string& kind, const std::string& app_id, const std::string& body,
        const std::function<T(const std::string&)>& parse);
  ChatResponse send(const std::string& kind, const ChatRequest& req);
  std::vector<ChatMessage> build_messages(const std::string& kind, const std::string& app_id,
                                          const std::string& body) const;

  std::unique_ptr<Transport> transport_;
  LlmConfig cfg_;
  std::shared_ptr<const AppRegistry> registry_;
  SleepFn sleep_;
  TokenUsage usage_;
  std::vector<LedgerEntry> ledger_;
  std::vector<Exchange> exchanges_;
};

// Reply parsers, exposed for tests. Each throws BackendError(kParse) with a
// short reason when the reply does not follow the schema.
SchedulingProposal parse_schedule_reply(const std::string& reply);
TaskPlan parse_plan_reply(const std::string& reply);
PredictReply parse_predict_reply(const std::string& reply);
StepSummary parse_summary_reply(const std::string& reply);
Evaluation parse_evaluation_reply(const std::string& reply);
ReflectionTip parse_reflection_reply(const std::string& reply);
ExtractedExperience parse_extract_reply(const std::string& reply, const std::string& app_id,
                                        const std::string& task_id);
std::string parse_adjust_reply(const std::string& reply);
ExpertiseVerdict parse_expertise_reply(const std::string& reply);

}  // namespace steward
