#pragma once

#include <string>
#include <vector>

#include "steward/backend.hpp"
#include "steward/model.hpp"

namespace steward {

enum class ViolationKind {
  kEmptyGraph,
  kDuplicateTask,
  kUnknownApp,
  kStaffMismatch,
  kDanglingEdge,
  kCycleDetected,
  kUnboundPlaceholder,
  kAmbiguousPlaceholder,
};
std::string_view to_string(ViolationKind k);

struct Violation {
  ViolationKind kind;
  std::string subject;  // task id or "from->to"
  std::string message;
};

std::vector<Violation> validate_graph(const SchedulingGraph& sg, const std::vector<std::string>& app_ids);

/// Kahn's algorithm, always releasing the smallest ready task_id first.
/// Throws Error(kCycle) if the graph is cyclic.
std::vector<GraphNode> topological_order(const SchedulingGraph& sg);

/// Asks the backend for a scheduling proposal and validates it, with one
/// correction round-trip. Throws Error(kUnschedulableInstruction) when no
/// task maps to a known app and Error(kInvalidGraph) when the corrected
/// proposal still violates the graph invariants.
SchedulingProposal schedule(const Instruction& instr, const std::vector<ExpertiseEntry>& expertise,
                            AgentBackend& backend, const std::vector<std::string>& app_ids);

}  // namespace steward
