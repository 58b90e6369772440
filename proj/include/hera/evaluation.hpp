#pragma once

// Baseline policies, the brute-force oracle, workload metrics, CPT curves
// and the cost/latency accounting.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hera/domain.hpp"
#include "hera/predictors.hpp"
#include "hera/router.hpp"
#include "hera/world.hpp"

namespace hera {

struct Judge {
  enum class Kind { Similarity, Exact };
  Kind kind = Kind::Similarity;
  double threshold = 0.7;

  bool correct(const std::string& final_output,
               const std::optional<std::string>& ground_truth) const;
};

struct CostModel {
  double llm_usd_per_1k_prompt_tokens = 0.01;
  double llm_usd_per_1k_completion_tokens = 0.01;
  // SLM execution is local and free.
};

// words * 4/3, rounded to the nearest whole token.
long approx_token_count(const std::string& text);

double cost_of(const std::vector<ExecutedUnit>& units, const CostModel& model);
double cost_of(const RoutedExecution& execution, const CostModel& model);

struct LatencyModel {
  double slm_s = 3.0;
  double llm_s = 5.5;
  double network_s = 0.58;  // per cloud round trip
  double budget_s = 300.0;

  double call_latency(ModelKind m) const {
    return m == ModelKind::SLM ? slm_s : llm_s + network_s;
  }
};

struct Policy {
  enum class Kind { AllSlm, AllLlm, Random, Classifier, Hera };
  Kind kind = Kind::AllLlm;
  double p_llm = 0.5;       // Random
  uint64_t seed = 0;        // Random
  double threshold = 0.7;   // Classifier
  RouterConfig hera;        // Hera

  static Policy all_slm() { return Policy{Kind::AllSlm}; }
  static Policy all_llm() { return Policy{Kind::AllLlm}; }
  static Policy random(double p_llm, uint64_t seed);
  static Policy classifier(double threshold);
  static Policy hera_policy(RouterConfig config);

  std::string label() const;
};

struct PolicyReport {
  std::string policy;
  double accuracy = 0.0;
  double slm_usage = 0.0;
  double completion_rate = 0.0;
  double avg_subtasks = 0.0;
  double cost_usd = 0.0;       // mean per request
  double sim_latency_s = 0.0;  // mean per request
  int requests = 0;
};

struct RequestOutcome {
  std::string request_id;
  Assignment assignment;
  std::vector<ExecutedUnit> units;
  std::string final_output;
  bool finished = false;
  bool correct = false;
  double latency_s = 0.0;
  double cost_usd = 0.0;
  std::vector<RoutingDecision> decisions;  // populated for the routed policy
};

struct PolicyRun {
  PolicyReport report;
  std::vector<RequestOutcome> outcomes;
};

struct EvalSettings {
  Judge judge;
  CostModel cost;
  LatencyModel latency;
  int depth_cap = kDefaultDepthCap;
};

PolicyRun run_policy_detailed(const Policy& policy, const PredictorSuite& suite,
                              const ExecutionWorld& world,
                              const std::vector<UserRequest>& workload,
                              const EvalSettings& settings);

PolicyReport run_policy(const Policy& policy, const PredictorSuite& suite,
                        const ExecutionWorld& world, const std::vector<UserRequest>& workload,
                        const EvalSettings& settings);

// ---------------------------------------------------------------------------
// Oracle

struct OracleOptions {
  double accuracy_floor_frac = 0.9;
  int exhaustive_cap = 12;  // chains longer than this use beam search
  int beam_width = 64;
  Judge judge;
  int depth_cap = kDefaultDepthCap;
};

struct OracleResult {
  Assignment assignment;
  std::string final_output;
  bool correct = false;
  bool floor_unreachable = false;  // no assignment met the criterion
  bool approximate = false;        // beam search was used
  double slm_usage = 0.0;
  int units = 0;
};

// Maximum-SLM-usage assignment whose final output meets the per-request
// criterion; falls back to the all-LLM assignment (flagged) when none does.
// Ties prefer more SLM in later positions, then the lexicographically
// smallest choice string.
OracleResult oracle_assign(const ExecutionWorld& world, const UserRequest& request,
                           const OracleOptions& options);

struct WorkloadOracle {
  std::vector<OracleResult> per_request;
  double accuracy = 0.0;
  double floor_value = 0.0;
  std::string criterion;  // "per-request" or "workload"
};

// workload_level=false: every request keeps its per-request criterion.
// workload_level=true: requests may greedily relax to their max-SLM
// assignment while workload accuracy stays >= floor * All-LLM accuracy.
WorkloadOracle oracle_workload(const ExecutionWorld& world,
                               const std::vector<UserRequest>& workload,
                               const OracleOptions& options, bool workload_level);

// Fraction of mismatched positions between paired assignments; pairs of
// unequal length count the remainder as mismatches over the longer length.
double incorrect_assignment_rate(const std::vector<Assignment>& policy_decisions,
                                 const std::vector<Assignment>& oracle_decisions);

// ---------------------------------------------------------------------------
// CPT

struct CptCurve {
  std::vector<std::pair<double, double>> points;  // (llm_call_fraction, accuracy)
  double gap_low = 0.0;   // All-SLM accuracy
  double gap_high = 0.0;  // All-LLM accuracy

  bool degenerate() const { return gap_high <= gap_low; }
};

struct CptValue {
  double value = 0.0;
  bool attainable = true;
  bool degenerate = false;
};

// Minimum LLM-call fraction reaching x% of the accuracy gap; degenerate
// curves yield 0 (flagged), unreachable targets are flagged unattainable.
CptValue cpt(const CptCurve& curve, double x_percent);

}  // namespace hera
