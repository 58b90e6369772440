#pragma once

// RequestProfile: the unit-level structure of one profiled request, either
// planned by the synthetic generator or reconstructed from a stored trace.
// TraceStore bundles a workload's profiles with a shared embedding cache and
// the per-request alignments that trace-backed predictors consume.

#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "hera/domain.hpp"
#include "hera/similarity.hpp"
#include "hera/slmetrics.hpp"

namespace hera {

// One LLM-track unit and the SLM's rendering of it. The SLM reaches the
// unit's state through `lead_in` intermediate steps (possibly none) and ends
// at `slm_content`, whose similarity to `llm_content` is `match_sim`.
struct UnitPlan {
  std::string llm_content;
  std::string slm_content;
  std::vector<std::string> lead_in;
  double match_sim = 0.0;
  std::vector<double> lead_sims;
};

struct RequestProfile {
  UserRequest request;
  std::vector<UnitPlan> units;
  std::string llm_final;
  std::string slm_final;
  double final_match_sim = 0.0;  // cosine(slm_final, llm_final)
  // Final-output variants by accumulated degradation steps; variant 0 is
  // llm_final itself. Used by the branch execution model.
  std::vector<std::string> final_variants;

  int llm_len() const { return static_cast<int>(units.size()); }
  int slm_len() const;

  std::vector<Subtask> llm_path() const;
  std::vector<Subtask> slm_path() const;

  const std::string& final_for_steps(int steps) const;
};

// Directed next-subtask edges keyed by content: for each known subtask text,
// what each model produces next (or that the sequence terminates there).
struct ContentEdges {
  std::optional<std::string> slm_next;
  std::optional<std::string> llm_next;
  bool slm_terminal = false;
  bool llm_terminal = false;
};

// Where a content sits in its request: which unit, and on which track.
struct ContentRef {
  int request_index = -1;
  int unit = 0;          // 1-based
  enum class Kind { LlmUnit, SlmUnit, LeadIn } kind = Kind::LlmUnit;
};

class TraceStore {
 public:
  // Builds a store from generator profiles (exact edges) or from stored
  // traces. Trace-backed edges prefer the branch tree when present and fall
  // back to positional path adjacency otherwise.
  static TraceStore from_profiles(std::vector<RequestProfile> profiles,
                                  double sl_threshold = 0.7);
  static TraceStore from_traces(const std::vector<SubtaskTrace>& traces,
                                double sl_threshold = 0.7);

  const std::vector<RequestProfile>& profiles() const { return profiles_; }
  const RequestProfile* find_request(const std::string& request_id) const;
  int request_index(const std::string& request_id) const;  // -1 when unknown

  const ContentEdges* edges_for(const std::string& content) const;
  const ContentRef* ref_for(const std::string& content) const;
  const SLAlignment& alignment(int request_index) const;

  // 0-based slm_path index of the alignment match for `unit`, or -1.
  int match_index(int request_index, int unit) const;

  double sl_threshold() const { return sl_threshold_; }
  const EmbeddingCache& cache() const { return *cache_; }

  std::vector<SubtaskTrace> to_traces() const;  // paths + finals, no branches

 private:
  TraceStore() : cache_(std::make_shared<EmbeddingCache>(active_embedder())) {}
  void index();

  std::vector<RequestProfile> profiles_;
  double sl_threshold_ = 0.7;
  std::shared_ptr<EmbeddingCache> cache_;
  std::unordered_map<std::string, int> by_id_;
  std::unordered_map<std::string, ContentEdges> edges_;
  std::unordered_map<std::string, ContentRef> refs_;
  std::vector<SLAlignment> alignments_;
};

// Reconstructs a unit-level profile from a stored trace: with a branch tree
// the unit structure is recovered exactly; otherwise the alignment between
// the two paths segments the SLM path and unmatched units degrade to
// positional lookups.
RequestProfile profile_from_trace(const SubtaskTrace& trace, const EmbeddingCache& cache,
                                  double sl_threshold = 0.7);

}  // namespace hera
