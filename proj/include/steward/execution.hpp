#pragma once

#include <functional>
#include <string>

#include "steward/backend.hpp"
#include "steward/device.hpp"
#include "steward/memory.hpp"
#include "steward/model.hpp"

namespace steward {

/// Retrieves the top-3 guidelines of the task's app and asks the backend for
/// a plan. Sources outside the retrieved set are dropped.
TaskPlan plan_task(const Task& task, const std::string& instruction_id, const MemoryStore& memory,
                   AgentBackend& backend);

/// Validated next action, with one correction round-trip. Throws
/// BackendError(kInvalidActionFromBackend) when the corrected answer is
/// still unusable.
Action predict_action(const StaffContext& ctx, const ScreenState& state,
                      const std::vector<HistoryTriple>& history, AgentBackend& backend);

/// Deterministic summary composed from the action and the outcome note.
StepSummary compose_summary(const ScreenState& state, const Action& action, const StepOutcome& outcome);

/// Backend summary with any blank field filled from compose_summary().
StepSummary summarize_step(const Task& task, const ScreenState& state, const Action& action,
                           const StepOutcome& outcome, AgentBackend& backend);

using StepObserver = std::function<void(const HistoryTriple&, std::size_t index)>;

/// The staff loop for one attempt. If the task's app is not foregrounded the
/// runner launches it from home as the first recorded step. Unusable backend
/// output ends the attempt as if the budget ran out, with error_note set.
ExecutionHistory run_assigned_task(StaffContext& ctx, DeviceEnv& env, AgentBackend& backend, int n_step,
                                   const StepObserver& observer = {});

}  // namespace steward
