#include "hera/slmetrics.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

namespace hera {

SLAlignment align(const std::vector<Subtask>& llm_path, const std::vector<Subtask>& slm_path,
                  double threshold, const EmbeddingCache& cache) {
  if (llm_path.empty() || slm_path.empty())
    throw std::invalid_argument("align requires non-empty paths");
  if (threshold < 0.0 || threshold > 1.0)
    throw std::invalid_argument("align threshold must be in [0,1]");

  SLAlignment out;
  out.distances.resize(llm_path.size(), SLDistance::infinite());
  out.similarities.resize(llm_path.size(), 0.0);

  int cursor = 0;       // 0-based index of the first unconsumed SLM subtask
  int prev_match = 0;   // 1-based index of the previous match (j_{k-1}), 0 initially
  for (size_t k = 0; k < llm_path.size(); ++k) {
    double best = 0.0;
    int found = -1;
    for (int j = cursor; j < static_cast<int>(slm_path.size()); ++j) {
      double sim = cache.cosine_between(llm_path[k].content, slm_path[j].content);
      best = std::max(best, sim);
      if (sim >= threshold) {
        found = j;
        break;
      }
    }
    out.similarities[k] = best;
    if (found >= 0) {
      int jk = found + 1;  // 1-based
      out.matches.emplace_back(static_cast<int>(k), found);
      out.distances[k] = SLDistance(jk - prev_match - 1);
      prev_match = jk;
      cursor = found + 1;
    }
    // unmatched: infinite distance, cursor stays
  }
  return out;
}

SLAlignment align(const std::vector<Subtask>& llm_path, const std::vector<Subtask>& slm_path,
                  double threshold) {
  EmbeddingCache cache(active_embedder());
  return align(llm_path, slm_path, threshold, cache);
}

SLAlignment align_optimal(const std::vector<Subtask>& llm_path,
                          const std::vector<Subtask>& slm_path, double threshold,
                          const EmbeddingCache& cache) {
  if (llm_path.empty() || slm_path.empty())
    throw std::invalid_argument("align requires non-empty paths");
  const int L = static_cast<int>(llm_path.size());
  const int S = static_cast<int>(slm_path.size());

  std::vector<std::vector<double>> sim(L, std::vector<double>(S));
  for (int k = 0; k < L; ++k)
    for (int j = 0; j < S; ++j)
      sim[k][j] = cache.cosine_between(llm_path[k].content, slm_path[j].content);

  // dp[k][j]: max matches using llm[k..) against slm[j..); prefer matching at
  // the earliest feasible slm index on ties.
  std::vector<std::vector<int>> dp(L + 1, std::vector<int>(S + 1, 0));
  for (int k = L - 1; k >= 0; --k) {
    for (int j = S - 1; j >= 0; --j) {
      int skip_l = dp[k + 1][j];
      int skip_s = dp[k][j + 1];
      int take = (sim[k][j] >= threshold) ? 1 + dp[k + 1][j + 1] : 0;
      dp[k][j] = std::max({skip_l, skip_s, take});
    }
  }

  SLAlignment out;
  out.distances.resize(L, SLDistance::infinite());
  out.similarities.resize(L, 0.0);
  int k = 0, j = 0, prev_match = 0;
  while (k < L && j < S) {
    if (sim[k][j] >= threshold && dp[k][j] == 1 + dp[k + 1][j + 1]) {
      out.matches.emplace_back(k, j);
      out.distances[k] = SLDistance(j + 1 - prev_match - 1);
      prev_match = j + 1;
      ++k;
      ++j;
    } else if (dp[k][j] == dp[k + 1][j]) {
      ++k;
    } else {
      ++j;
    }
  }
  for (int kk = 0; kk < L; ++kk) {
    double best = 0.0;
    for (int jj = 0; jj < S; ++jj) best = std::max(best, sim[kk][jj]);
    out.similarities[kk] = best;
  }
  return out;
}

std::vector<ProfileRow> sl_similarity_profile(const std::vector<SubtaskTrace>& traces,
                                              double align_threshold, double final_threshold,
                                              const EmbeddingCache& cache, MatcherKind matcher) {
  if (traces.empty()) throw std::invalid_argument("sl_similarity_profile requires traces");

  struct Acc {
    double sim_sum = 0.0;
    long finite_dist_sum = 0;
    int finite = 0;
    int infinite = 0;
    int count = 0;
  };
  std::map<std::pair<int, bool>, Acc> acc;

  for (const SubtaskTrace& t : traces) {
    bool matched = cache.similar(t.slm_final, t.llm_final, final_threshold);
    SLAlignment a = matcher == MatcherKind::Greedy
                        ? align(t.llm_path, t.slm_path, align_threshold, cache)
                        : align_optimal(t.llm_path, t.slm_path, align_threshold, cache);
    for (size_t k = 0; k < t.llm_path.size(); ++k) {
      Acc& slot = acc[{static_cast<int>(k) + 1, matched}];
      slot.sim_sum += a.similarities[k];
      slot.count += 1;
      if (a.distances[k].is_infinite()) {
        slot.infinite += 1;
      } else {
        slot.finite += 1;
        slot.finite_dist_sum += a.distances[k].value;
      }
    }
  }

  std::vector<ProfileRow> rows;
  rows.reserve(acc.size());
  for (const auto& [key, a] : acc) {
    ProfileRow r;
    r.seq_id = key.first;
    r.matched_group = key.second;
    r.mean_similarity = a.sim_sum / a.count;
    r.mean_finite_distance = a.finite > 0 ? static_cast<double>(a.finite_dist_sum) / a.finite : 0.0;
    r.finite_count = a.finite;
    r.infinite_count = a.infinite;
    r.trace_count = a.count;
    rows.push_back(r);
  }
  return rows;
}

std::string profile_to_csv(const std::vector<ProfileRow>& rows) {
  std::string out = "seq_id,group,mean_similarity,mean_finite_distance,infinite_count\n";
  char buf[160];
  for (const ProfileRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%s,%.6f,%.6f,%d\n", r.seq_id,
                  r.matched_group ? "matched" : "unmatched", r.mean_similarity,
                  r.mean_finite_distance, r.infinite_count);
    out += buf;
  }
  return out;
}

}  // namespace hera
