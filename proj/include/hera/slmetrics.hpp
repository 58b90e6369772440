#pragma once

// Ground-truth S-L distance and S-L similarity: aligns an LLM subtask
// sequence against an SLM subtask sequence by greedy monotone matching.

#include <limits>
#include <string>
#include <vector>

#include "hera/domain.hpp"
#include "hera/similarity.hpp"

namespace hera {

// Number of additional SLM subtasks needed before one matches a given LLM
// subtask; infinite when no match exists.
struct SLDistance {
  static constexpr int kInfinite = -1;
  int value = kInfinite;

  SLDistance() = default;
  explicit SLDistance(int v) : value(v) {}
  static SLDistance infinite() { return SLDistance(); }
  bool is_infinite() const { return value < 0; }

  bool operator==(const SLDistance& o) const {
    return is_infinite() ? o.is_infinite() : value == o.value;
  }
};

struct SLAlignment {
  // (llm_index, slm_index) pairs, 0-based, strictly increasing in both.
  std::vector<std::pair<int, int>> matches;
  // Per-LLM-subtask distance; index k corresponds to llm_path[k].
  std::vector<SLDistance> distances;
  // Best cosine seen in each LLM subtask's scanned window (matched or not).
  std::vector<double> similarities;
};

// Greedy monotone matching: for each LLM subtask in order, scan forward from
// one past the previous match for the first SLM subtask whose similarity
// meets `threshold` (inclusive). distance(L_k) = j_k - j_{k-1} - 1 over
// 1-based matched indices with j_0 = 0; unmatched subtasks get an infinite
// distance and do not advance the scan cursor.
SLAlignment align(const std::vector<Subtask>& llm_path, const std::vector<Subtask>& slm_path,
                  double threshold, const EmbeddingCache& cache);
SLAlignment align(const std::vector<Subtask>& llm_path, const std::vector<Subtask>& slm_path,
                  double threshold);

// Maximum-cardinality monotone matching (ties broken toward earlier SLM
// indices), provided for comparison; the greedy scan above is normative.
SLAlignment align_optimal(const std::vector<Subtask>& llm_path,
                          const std::vector<Subtask>& slm_path, double threshold,
                          const EmbeddingCache& cache);

struct ProfileRow {
  int seq_id = 0;
  bool matched_group = false;  // group by final-output similarity
  double mean_similarity = 0.0;
  double mean_finite_distance = 0.0;  // 0 when no finite entries
  int finite_count = 0;
  int infinite_count = 0;
  int trace_count = 0;
};

enum class MatcherKind { Greedy, Optimal };

// Per-sequence-ID mean S-L similarity over a workload, grouped by whether the
// trace's final outputs are similar at `final_threshold`. Infinite-distance
// entries contribute their best-window similarity to the mean and are
// tallied separately. The greedy matcher is normative; the optimal one is
// available for comparison.
std::vector<ProfileRow> sl_similarity_profile(const std::vector<SubtaskTrace>& traces,
                                              double align_threshold, double final_threshold,
                                              const EmbeddingCache& cache,
                                              MatcherKind matcher = MatcherKind::Greedy);

// CSV with columns: seq_id, group, mean_similarity, mean_finite_distance, infinite_count
std::string profile_to_csv(const std::vector<ProfileRow>& rows);

}  // namespace hera
