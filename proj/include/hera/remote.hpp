#pragma once

// HTTP adapters for predictors and embeddings. One JSON round trip per
// prediction: POST / {"role": "urc|sp_slm|sp_llm|dp|sd", "inputs": {...}}
// -> {"output": ...}. Timeouts and transport failures raise RemoteError,
// which callers surface as a routing fallback toward the LLM.

#include <memory>
#include <stdexcept>
#include <string>

#include "hera/predictors.hpp"
#include "hera/similarity.hpp"

namespace hera {

struct RemoteError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class RemoteSuite final : public PredictorSuite {
 public:
  // endpoint: "host:port" or "http://host:port"; timeout in seconds.
  explicit RemoteSuite(std::string endpoint, double timeout_s = 10.0);
  ~RemoteSuite() override;

  std::optional<double> urc_predict(const UserRequest& request) const override;
  std::optional<Subtask> sp_predict(ModelKind model, const Subtask& current) const override;
  SLDistance dp_predict(const std::string& content, int seq_id) const override;
  std::vector<Subtask> sd_decompose(const Subtask& current, const Subtask& predicted_next_llm,
                                    int max_parts) const override;
  std::optional<Subtask> sle_rollout(const Subtask& current, int steps) const override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// POST /embed {"text": ...} -> {"embedding": [...]} (or a bare JSON array).
class RemoteEmbedder final : public Embedder {
 public:
  explicit RemoteEmbedder(std::string endpoint, double timeout_s = 10.0);
  ~RemoteEmbedder() override;

  Embedding embed(const std::string& text) const override;
  int dim() const override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace hera
