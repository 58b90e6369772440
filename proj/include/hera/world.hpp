#pragma once

// Execution worlds replay profiled requests. A session starts from either
// root (the model that decomposes the request into its first subtask) and
// executes one subtask per step on the chosen model.
//
// Branch semantics over a RequestProfile: executing on the LLM stays on (or
// recovers to) the LLM track; executing on the SLM walks the finer SLM
// segment of the next unit. The chain accrues degradation steps when
// desynced content is handed to the LLM (+1) or reaches the final production
// desynced (+3), where "desynced" means the content's track similarity falls
// below the position-adaptive default threshold. The final text is the
// profile's variant for the accrued step count.

#include <map>
#include <memory>
#include <string>

#include "hera/domain.hpp"
#include "hera/trace_store.hpp"

namespace hera {

class WorldSession {
 public:
  virtual ~WorldSession() = default;
  virtual const Subtask& current() const = 0;  // subtask awaiting execution
  virtual bool finished() const = 0;
  virtual const std::string& final_output() const = 0;  // valid once finished
  virtual int executed_count() const = 0;
  // Executes the current subtask; produces the next one or finishes.
  virtual void execute(ModelKind choice) = 0;
  virtual std::unique_ptr<WorldSession> clone() const = 0;
};

class ExecutionWorld {
 public:
  virtual ~ExecutionWorld() = default;
  // Throws std::out_of_range for unknown request ids.
  virtual std::unique_ptr<WorldSession> open(const std::string& request_id,
                                             ModelKind root) const = 0;
};

// Similarity a produced subtask must keep to its LLM-track counterpart to
// count as synced, indexed by unit position (default schedule, capped 0.7).
double world_sync_threshold(int unit);

// Degradation steps at an SLM->LLM handoff of desynced content.
inline constexpr int kRecoverySteps = 1;
// Degradation steps when the final output is produced from a desynced state.
inline constexpr int kTerminalDesyncSteps = 3;

// Generative world over RequestProfiles (the synthetic-workload world): any
// branch is evaluated lazily from the unit plan.
class ProfileWorld final : public ExecutionWorld {
 public:
  explicit ProfileWorld(std::shared_ptr<const TraceStore> store) : store_(std::move(store)) {}
  std::unique_ptr<WorldSession> open(const std::string& request_id,
                                     ModelKind root) const override;

 private:
  std::shared_ptr<const TraceStore> store_;
};

// Replay world over stored traces: stored mixed branches resolve exactly;
// absent prefixes fall back to positional lookup on the chosen model's path
// (next subtask = path[depth], final = that path's stored final).
class TraceWorld final : public ExecutionWorld {
 public:
  explicit TraceWorld(std::vector<SubtaskTrace> traces);
  std::unique_ptr<WorldSession> open(const std::string& request_id,
                                     ModelKind root) const override;

 private:
  std::vector<SubtaskTrace> traces_;
  std::map<std::string, int> by_id_;
};

// Enumerates every executor branch of the profile's tree (all-LLM prefixes
// excluded as they are implied by llm_path) into the JSONL branch map.
// Throws if a branch exceeds depth_cap.
std::map<std::string, BranchNode> materialize_branches(const RequestProfile& profile,
                                                       int depth_cap = kDefaultDepthCap);

}  // namespace hera
