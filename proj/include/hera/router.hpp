#pragma once

// Online decision pipeline: a request-level gate, then a per-subtask cascade
// of similarity evaluation, distance-based lookahead, convergence detection
// and decomposition, falling back to the LLM when every stage declines.

#include <optional>
#include <string>
#include <vector>

#include "hera/domain.hpp"
#include "hera/predictors.hpp"
#include "hera/similarity.hpp"
#include "hera/world.hpp"

namespace hera {

struct RouterConfig {
  // Request-level gate threshold. 0 always passes; values above 1 never
  // pass (both degenerate settings are legal and useful for baselines).
  double urc_threshold = 0.7;
  ThresholdSchedule schedule;
  int cd_horizon = 5;
  int sd_max = 4;
  int depth_cap = kDefaultDepthCap;

  bool enable_urc = true;
  bool enable_sse = true;
  bool enable_sle = true;
  bool enable_cd = true;
  bool enable_sd = true;

  void validate() const;
};

struct ExecutedUnit {
  Subtask subtask;
  ModelKind choice = ModelKind::LLM;
  std::string output;  // produced next subtask or the final output
};

struct RoutedExecution {
  std::string request_id;
  std::vector<RoutingDecision> decisions;
  std::vector<ExecutedUnit> executed;
  std::string final_output;
  bool finished = false;

  Assignment assignment() const;
  double slm_usage() const;
};

struct StageOutcome {
  bool pass = false;
  double kappa = 0.0;
  std::optional<double> score;
  int span = 1;          // units committed to the SLM on success
  std::string detail;
};

struct SdOutcome {
  bool pass = false;
  double kappa = 0.0;
  std::vector<Subtask> subtasks;
  std::string detail;
};

// True iff the predicted next subtasks from both models are similar at the
// position-adaptive threshold; exhausted predictions count as dissimilar.
StageOutcome sse_decide(const RouterConfig& config, const PredictorSuite& suite,
                        const Subtask& current);

// Distance-guided lookahead: with predicted S-L distance d, the SLM's
// (d+1)-step track continuation must reproduce the current subtask. d = 0
// degenerates to sse_decide; on success the current and next d
// SLM-generated subtasks are committed (span = d + 1).
StageOutcome sle_decide(const RouterConfig& config, const PredictorSuite& suite,
                        const Subtask& current);

// Forward convergence search: largest offset k within the horizon where the
// two models' k-step predictions align (threshold taken at seq_id + k); on
// success units current..current+k are committed (span = k + 1).
StageOutcome cd_decide(const RouterConfig& config, const PredictorSuite& suite,
                       const Subtask& current);

// All-or-nothing decomposition: every sub-subtask must pass sse_decide at
// the parent's seq_id, else the subtask falls back to the LLM.
SdOutcome sd_decide(const RouterConfig& config, const PredictorSuite& suite,
                    const Subtask& current);

RoutedExecution route_request(const RouterConfig& config, const PredictorSuite& suite,
                              const ExecutionWorld& world, const UserRequest& request);

// JSONL routing log: one decision per line with fields seq_id, choice,
// stage, detail, kappa, score.
std::string routing_log_jsonl(const RoutedExecution& execution);

}  // namespace hera
