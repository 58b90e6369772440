#pragma once

// Synthetic workload generator. Texts are templated from per-request token
// pools whose hash buckets are distinct, so the builtin embedder's cosine
// between two texts equals their shared-token fraction by construction.
// Population statistics (path-length means, matched-final fraction, the
// rising similarity profile of matched requests) converge to the configured
// targets as n grows.

#include <memory>
#include <vector>

#include "hera/trace_store.hpp"
#include "hera/world.hpp"

namespace hera {

struct GeneratorConfig {
  uint64_t seed = 1;
  int n_requests = 100;

  double llm_len_mean = 5.8;
  double slm_len_mean = 6.9;

  // Target SLM-LLM unit similarity for matched-final requests by request
  // stage (first/middle/last third). Values are snapped to multiples of
  // 1/token_len.
  double sim_early = 0.75;
  double sim_mid = 10.0 / 12.0;
  double sim_late = 11.0 / 12.0;

  double matched_final_fraction = 0.21;
  double llm_correct_rate = 0.9;

  int vocab_size = 240;  // per-request pool of bucket-distinct tokens
  int token_len = 12;    // tokens per subtask text

  // Structure probabilities (scaled so the mean SLM/LLM length difference
  // matches slm_len_mean - llm_len_mean; defaults absorb placement misses
  // on short requests).
  double p_sle_block = 0.30;
  double p_sd3 = 0.30;
  double p_sd2 = 0.12;
  double p_cd_stretch = 0.5;

  int depth_cap = kDefaultDepthCap;

  void validate() const;
};

struct Workload {
  GeneratorConfig config;
  std::shared_ptr<const TraceStore> store;

  std::vector<UserRequest> requests() const;
  // JSONL-facing traces; with_branches materializes the full executor tree.
  std::vector<SubtaskTrace> traces(bool with_branches) const;
};

Workload generate_workload(const GeneratorConfig& config);

}  // namespace hera
