#pragma once

// The five estimator roles behind one interface: request classifier (URC),
// next-subtask predictors for both models (SP), S-L distance predictor (DP)
// and subtask decomposer (SD), plus the SLM-track rollout the lookahead
// evaluator needs. Trace-backed implementations are deterministic lookups
// over a profiled workload; a noise wrapper emulates imperfect estimators;
// a remote adapter forwards each prediction over HTTP.

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hera/domain.hpp"
#include "hera/slmetrics.hpp"
#include "hera/trace_store.hpp"

namespace hera {

struct NoProfileError : std::runtime_error {
  NoProfileError() : std::runtime_error("no profile") {}
};
struct SequenceExhausted : std::runtime_error {
  SequenceExhausted() : std::runtime_error("sequence exhausted") {}
};

class PredictorSuite {
 public:
  virtual ~PredictorSuite() = default;

  // Similarity score in [0,1] for running the whole request on the SLM;
  // nullopt when the request is unknown to the backing data.
  virtual std::optional<double> urc_predict(const UserRequest& request) const = 0;

  // Next subtask when `current` is processed by `model` (seq_id + 1,
  // producer = model); nullopt when the sequence is exhausted or the
  // subtask is unknown.
  virtual std::optional<Subtask> sp_predict(ModelKind model, const Subtask& current) const = 0;

  // S-L distance of the subtask with this content; INFINITE when unmatched
  // or unknown. Throws on seq_id < 1.
  virtual SLDistance dp_predict(const std::string& content, int seq_id) const = 0;

  // Finer sub-subtasks whose sequential SLM execution reaches
  // predicted_next_llm; at most max_parts entries (tail steps merged).
  // Returns {current} when no finer decomposition exists.
  virtual std::vector<Subtask> sd_decompose(const Subtask& current,
                                            const Subtask& predicted_next_llm,
                                            int max_parts) const = 0;

  // The subtask the SLM reaches after `steps` consecutive SP_SLM
  // applications along its own track toward the current subtask's position;
  // nullopt when the track exhausts first or the position is unknown.
  virtual std::optional<Subtask> sle_rollout(const Subtask& current, int steps) const = 0;
};

// Spec-shaped wrappers with the documented error behavior.
SimilarityScore urc_predict(const PredictorSuite& suite, const UserRequest& request);
Subtask sp_predict(const PredictorSuite& suite, ModelKind model, const Subtask& current);
SLDistance dp_predict(const PredictorSuite& suite, const std::string& content, int seq_id);
std::vector<Subtask> sd_decompose(const PredictorSuite& suite, const Subtask& current,
                                  const Subtask& predicted_next_llm, int max_parts = 4);

class TraceBackedSuite final : public PredictorSuite {
 public:
  explicit TraceBackedSuite(std::shared_ptr<const TraceStore> store);

  std::optional<double> urc_predict(const UserRequest& request) const override;
  std::optional<Subtask> sp_predict(ModelKind model, const Subtask& current) const override;
  SLDistance dp_predict(const std::string& content, int seq_id) const override;
  std::vector<Subtask> sd_decompose(const Subtask& current, const Subtask& predicted_next_llm,
                                    int max_parts) const override;
  std::optional<Subtask> sle_rollout(const Subtask& current, int steps) const override;

 private:
  std::shared_ptr<const TraceStore> store_;
  std::vector<std::vector<std::string>> slm_paths_;  // per request, by index
};

// Flips similarity-driven outcomes with probability `noise` (deterministic
// per input): URC scores reflect across the scale, SP/rollout outputs are
// corrupted to break similarity, finite distances turn infinite.
class NoisySuite final : public PredictorSuite {
 public:
  NoisySuite(std::shared_ptr<const PredictorSuite> base, double noise, uint64_t seed);

  std::optional<double> urc_predict(const UserRequest& request) const override;
  std::optional<Subtask> sp_predict(ModelKind model, const Subtask& current) const override;
  SLDistance dp_predict(const std::string& content, int seq_id) const override;
  std::vector<Subtask> sd_decompose(const Subtask& current, const Subtask& predicted_next_llm,
                                    int max_parts) const override;
  std::optional<Subtask> sle_rollout(const Subtask& current, int steps) const override;

 private:
  bool flip(const std::string& key) const;
  std::string corrupt(const std::string& content, const std::string& key) const;

  std::shared_ptr<const PredictorSuite> base_;
  double noise_;
  uint64_t seed_;
};

}  // namespace hera
