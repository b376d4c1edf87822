#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "steward/app.hpp"
#include "steward/backend.hpp"
#include "steward/engine.hpp"
#include "steward/memory.hpp"
#include "steward/trace.hpp"
#include "steward/truth.hpp"

namespace steward {

struct GenerateOptions {
  std::map<int, int> counts;  // complexity (number of apps) -> instructions
  std::uint64_t seed = 0;
  std::string id_prefix = "i";
  int max_attempts = 500;  // per instruction
};

/// Parses "a,b,c" as 2-, 3- and 4-app counts.
std::map<int, int> parse_mix(const std::string& mix);

/// Builds instructions by chaining task templates along type-compatible
/// output/slot pairs, then replays every instruction on a fresh device to
/// record its ground truth. Throws Error(kInfeasibleMix) when a requested
/// complexity cannot be realized.
std::vector<GeneratedInstruction> generate_suite(const std::shared_ptr<const AppRegistry>& registry,
                                                 const GenerateOptions& options);

/// One task of a hand-specified instruction. `producer` is the index of an
/// earlier node whose output `output` feeds slot `slot`; -1 for none.
struct NodeSpec {
  std::string app_id;
  std::string template_id;
  std::map<std::string, std::string> bindings;  // params and unfed slots
  int producer = -1;
  std::string output;
  std::string slot;
};

/// Builds and replay-validates one instruction from explicit template
/// choices. Throws Error(kRegistry) when the nodes do not form a valid,
/// replayable instruction.
GeneratedInstruction compose_instruction(const std::shared_ptr<const AppRegistry>& registry, const std::string& id,
                                         const std::vector<NodeSpec>& nodes);

std::string suite_document(const std::vector<GeneratedInstruction>& suite);
void save_suite(const std::filesystem::path& path, const std::vector<GeneratedInstruction>& suite);
std::vector<GeneratedInstruction> load_suite(const std::filesystem::path& path);

struct BucketMetrics {
  int instructions = 0;
  double success_rate = 0;
  double task_rate = 0;
  double app_rate = 0;
  double step_rate = 0;
  double actions_per_task = 0;
  double tokens_per_action = 0;

  bool operator==(const BucketMetrics&) const = default;
};

struct MetricsReport {
  BucketMetrics overall;
  std::map<int, BucketMetrics> by_complexity;

  bool operator==(const MetricsReport&) const = default;
};

/// Throws Error(kMisalignedInputs) unless every report pairs with exactly
/// one ground truth by instruction id and carries one goal flag per task.
MetricsReport compute_metrics(const std::vector<RunReport>& reports,
                              const std::vector<GeneratedInstruction>& truths);

std::string metrics_json(const MetricsReport& m);
std::string metrics_table(const MetricsReport& m);

/// Goal predicate outcomes for the ground-truth tasks, in task order.
std::vector<bool> check_goals(const DeviceEnv& env, const GroundTruth& truth);

struct SuiteResult {
  std::vector<RunReport> reports;
  MetricsReport metrics;
};

/// Runs every instruction on a fresh device, sharing `memory` across the
/// suite. Per-instruction failures are recorded, never thrown.
SuiteResult run_suite(const std::vector<GeneratedInstruction>& suite, const std::shared_ptr<const AppRegistry>& registry,
                      const RunConfig& cfg, MemoryStore& memory, AgentBackend& backend, TraceWriter* trace = nullptr);

}  // namespace steward
