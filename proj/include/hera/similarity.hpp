#pragma once

// Text embedding abstraction, cosine similarity, and the position-adaptive
// threshold schedule used by the routing cascade.

#include <Eigen/Core>
#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "hera/domain.hpp"

namespace hera {

using Embedding = Eigen::VectorXd;

class Embedder {
 public:
  virtual ~Embedder() = default;
  // Deterministic, unit-norm embedding. Throws on empty input.
  virtual Embedding embed(const std::string& text) const = 0;
  virtual int dim() const = 0;
};

// Hashed bag-of-tokens embedder: lowercased alphanumeric tokens, each hashed
// into one of `dim` buckets (FNV-1a), counts L2-normalized. Text with no
// tokens at all maps to the reserved unit basis vector e_0.
class HashedBagEmbedder final : public Embedder {
 public:
  static constexpr int kDim = 256;

  explicit HashedBagEmbedder(int dim = kDim) : dim_(dim) {}

  Embedding embed(const std::string& text) const override;
  int dim() const override { return dim_; }

  static std::vector<std::string> tokenize(const std::string& text);
  // Bucket a single token lands in; exposed so tests can verify bucket
  // disjointness directly.
  int token_bucket(const std::string& token) const;

 private:
  int dim_;
};

const Embedder& builtin_embedder();

// Process-wide embedder selection (config key `embedder = builtin|remote`).
// The active embedder backs every similarity comparison that does not take
// an explicit embedder; set it once at startup, before stores or caches are
// built. Passing nullptr restores the builtin.
void set_active_embedder(std::shared_ptr<const Embedder> embedder);
const Embedder& active_embedder();

// Cosine similarity of two embeddings, clamped to [0,1] (raw negatives map
// to 0). Throws on dimension mismatch.
SimilarityScore cosine(const Embedding& a, const Embedding& b);

// Position-adaptive threshold: threshold_at = base + min(seq_id, cap_id)*step.
// With defaults the schedule caps at flat_default (0.6 + 5*0.02 = 0.7), the
// same value used for request-level comparisons.
struct ThresholdSchedule {
  double base = 0.6;
  double step = 0.02;
  int cap_id = 5;
  double flat_default = 0.7;

  void validate() const;
};

double threshold_at(const ThresholdSchedule& schedule, int seq_id);

// Inclusive comparison: true iff cosine(embed(a), embed(b)) >= threshold.
bool is_similar(const Embedder& e, const std::string& a, const std::string& b, double threshold);
bool is_similar(const std::string& a, const std::string& b, double threshold);

// Memoizing wrapper around an embedder; single-threaded use.
class EmbeddingCache {
 public:
  explicit EmbeddingCache(const Embedder& e) : embedder_(e) {}

  const Embedding& get(const std::string& text) const;
  double cosine_between(const std::string& a, const std::string& b) const;
  bool similar(const std::string& a, const std::string& b, double threshold) const {
    return cosine_between(a, b) >= threshold;
  }
  const Embedder& embedder() const { return embedder_; }

 private:
  const Embedder& embedder_;
  mutable std::unordered_map<std::string, Embedding> memo_;
};

}  // namespace hera
