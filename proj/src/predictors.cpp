#include "hera/predictors.hpp"

#include <algorithm>

#include "hera/rng.hpp"

namespace hera {

SimilarityScore urc_predict(const PredictorSuite& suite, const UserRequest& request) {
  auto score = suite.urc_predict(request);
  if (!score) throw NoProfileError();
  return SimilarityScore(*score);
}

Subtask sp_predict(const PredictorSuite& suite, ModelKind model, const Subtask& current) {
  auto next = suite.sp_predict(model, current);
  if (!next) throw SequenceExhausted();
  return *next;
}

SLDistance dp_predict(const PredictorSuite& suite, const std::string& content, int seq_id) {
  return suite.dp_predict(content, seq_id);
}

std::vector<Subtask> sd_decompose(const PredictorSuite& suite, const Subtask& current,
                                  const Subtask& predicted_next_llm, int max_parts) {
  return suite.sd_decompose(current, predicted_next_llm, max_parts);
}

TraceBackedSuite::TraceBackedSuite(std::shared_ptr<const TraceStore> store)
    : store_(std::move(store)) {
  slm_paths_.reserve(store_->profiles().size());
  for (const RequestProfile& p : store_->profiles()) {
    std::vector<std::string> path;
    for (const Subtask& st : p.slm_path()) path.push_back(st.content);
    slm_paths_.push_back(std::move(path));
  }
}

std::optional<double> TraceBackedSuite::urc_predict(const UserRequest& request) const {
  const RequestProfile* p = store_->find_request(request.id);
  if (!p) return std::nullopt;
  return p->final_match_sim;
}

std::optional<Subtask> TraceBackedSuite::sp_predict(ModelKind model, const Subtask& current) const {
  const ContentEdges* edges = store_->edges_for(current.content);
  if (!edges) return std::nullopt;
  const auto& next = model == ModelKind::SLM ? edges->slm_next : edges->llm_next;
  if (!next) return std::nullopt;
  return Subtask{current.seq_id + 1, *next, model};
}

SLDistance TraceBackedSuite::dp_predict(const std::string& content, int seq_id) const {
  if (seq_id < 1) throw std::invalid_argument("seq_id must be >= 1");
  const ContentRef* ref = store_->ref_for(content);
  if (!ref || ref->kind == ContentRef::Kind::LeadIn) return SLDistance::infinite();
  return store_->alignment(ref->request_index).distances.at(ref->unit - 1);
}

std::vector<Subtask> TraceBackedSuite::sd_decompose(const Subtask& current,
                                                    const Subtask& predicted_next_llm,
                                                    int max_parts) const {
  max_parts = std::max(max_parts, 1);
  const EmbeddingCache& cache = store_->cache();
  const double threshold = store_->sl_threshold();

  // Walk the SLM continuation until it reproduces the predicted next LLM
  // subtask; those finer steps are the decomposition.
  std::vector<std::string> steps;
  std::string at = current.content;
  constexpr int kScanLimit = 8;
  bool reached = false;
  for (int i = 0; i < kScanLimit; ++i) {
    const ContentEdges* edges = store_->edges_for(at);
    if (!edges || !edges->slm_next) break;
    at = *edges->slm_next;
    steps.push_back(at);
    if (cache.cosine_between(at, predicted_next_llm.content) >= threshold) {
      reached = true;
      break;
    }
  }
  if (!reached || steps.size() < 2) return {current};  // indivisible

  if (static_cast<int>(steps.size()) > max_parts) {
    std::string merged = steps[max_parts - 1];
    for (size_t i = max_parts; i < steps.size(); ++i) merged += " " + steps[i];
    steps.resize(max_parts - 1);
    steps.push_back(std::move(merged));
  }
  std::vector<Subtask> out;
  out.reserve(steps.size());
  for (std::string& s : steps)
    out.push_back(Subtask{current.seq_id, std::move(s), ModelKind::SLM});
  return out;
}

std::optional<Subtask> TraceBackedSuite::sle_rollout(const Subtask& current, int steps) const {
  if (steps < 1) return std::nullopt;
  const ContentRef* ref = store_->ref_for(current.content);
  if (!ref || ref->kind == ContentRef::Kind::LeadIn) return std::nullopt;

  // Anchor: first SLM entry past the previous unit's alignment match.
  const SLAlignment& a = store_->alignment(ref->request_index);
  int anchor = 0;
  for (const auto& [lk, sj] : a.matches) {
    if (lk < ref->unit - 1) anchor = sj + 1;
  }
  const std::vector<std::string>& path = slm_paths_[ref->request_index];
  int landing = anchor + steps - 1;
  if (landing >= static_cast<int>(path.size())) return std::nullopt;
  return Subtask{current.seq_id + steps, path[landing], ModelKind::SLM};
}

NoisySuite::NoisySuite(std::shared_ptr<const PredictorSuite> base, double noise, uint64_t seed)
    : base_(std::move(base)), noise_(noise), seed_(seed) {
  if (noise < 0.0 || noise > 0.5) throw std::invalid_argument("predictor noise must be in [0,0.5]");
}

bool NoisySuite::flip(const std::string& key) const {
  SplitMix64 rng(mix_seed(seed_, hash64(key)));
  return rng.u01() < noise_;
}

std::string NoisySuite::corrupt(const std::string& content, const std::string& key) const {
  // Replace every other token with junk so the output lands far from the
  // true prediction under the bag-of-tokens embedder.
  SplitMix64 rng(mix_seed(seed_ ^ 0x5bd1e995u, hash64(key)));
  auto tokens = HashedBagEmbedder::tokenize(content);
  std::string out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    if (i % 2 == 0) {
      char buf[20];
      std::snprintf(buf, sizeof(buf), "z%llx", static_cast<unsigned long long>(rng.next() >> 32));
      out += buf;
    } else {
      out += tokens[i];
    }
  }
  return out.empty() ? "z0" : out;
}

std::optional<double> NoisySuite::urc_predict(const UserRequest& request) const {
  auto score = base_->urc_predict(request);
  if (score && flip("urc:" + request.id)) return 1.0 - *score;
  return score;
}

std::optional<Subtask> NoisySuite::sp_predict(ModelKind model, const Subtask& current) const {
  auto next = base_->sp_predict(model, current);
  if (next && flip(std::string("sp:") + model_name(model) + ":" + current.content))
    next->content = corrupt(next->content, current.content);
  return next;
}

SLDistance NoisySuite::dp_predict(const std::string& content, int seq_id) const {
  SLDistance d = base_->dp_predict(content, seq_id);
  if (flip("dp:" + content)) return d.is_infinite() ? SLDistance(0) : SLDistance::infinite();
  return d;
}

std::vector<Subtask> NoisySuite::sd_decompose(const Subtask& current,
                                              const Subtask& predicted_next_llm,
                                              int max_parts) const {
  return base_->sd_decompose(current, predicted_next_llm, max_parts);
}

std::optional<Subtask> NoisySuite::sle_rollout(const Subtask& current, int steps) const {
  auto landed = base_->sle_rollout(current, steps);
  if (landed && flip("sle:" + current.content))
    landed->content = corrupt(landed->content, current.content);
  return landed;
}

}  // namespace hera
