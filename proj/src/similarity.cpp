#include "hera/similarity.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace hera {

namespace {

uint64_t fnv1a(const std::string& s) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

std::vector<std::string> HashedBagEmbedder::tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

int HashedBagEmbedder::token_bucket(const std::string& token) const {
  return static_cast<int>(fnv1a(token) % static_cast<uint64_t>(dim_));
}

Embedding HashedBagEmbedder::embed(const std::string& text) const {
  if (text.empty()) throw std::invalid_argument("empty input");
  Embedding v = Embedding::Zero(dim_);
  for (const std::string& tok : tokenize(text)) v[token_bucket(tok)] += 1.0;
  double norm = v.norm();
  if (norm == 0.0) {
    v[0] = 1.0;  // reserved basis vector for token-less text
    return v;
  }
  v /= norm;
  return v;
}

const Embedder& builtin_embedder() {
  static const HashedBagEmbedder instance;
  return instance;
}

namespace {
std::shared_ptr<const Embedder>& active_slot() {
  static std::shared_ptr<const Embedder> slot;
  return slot;
}
}  // namespace

void set_active_embedder(std::shared_ptr<const Embedder> embedder) {
  active_slot() = std::move(embedder);
}

const Embedder& active_embedder() {
  const auto& slot = active_slot();
  return slot ? *slot : builtin_embedder();
}

SimilarityScore cosine(const Embedding& a, const Embedding& b) {
  if (a.size() != b.size()) throw std::invalid_argument("embedding dimension mismatch");
  double na = a.norm();
  double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return SimilarityScore(0.0);
  double raw = a.dot(b) / (na * nb);
  return SimilarityScore(std::clamp(raw, 0.0, 1.0));
}

void ThresholdSchedule::validate() const {
  if (!(base > 0.0 && base <= flat_default && flat_default <= 1.0))
    throw std::invalid_argument("threshold schedule requires 0 < base <= flat_default <= 1");
  if (step < 0.0) throw std::invalid_argument("threshold step must be >= 0");
  if (cap_id < 0) throw std::invalid_argument("threshold cap_id must be >= 0");
}

double threshold_at(const ThresholdSchedule& schedule, int seq_id) {
  if (seq_id < 1) throw std::invalid_argument("seq_id must be >= 1");
  return schedule.base + std::min(seq_id, schedule.cap_id) * schedule.step;
}

bool is_similar(const Embedder& e, const std::string& a, const std::string& b, double threshold) {
  return cosine(e.embed(a), e.embed(b)).value >= threshold;
}

bool is_similar(const std::string& a, const std::string& b, double threshold) {
  return is_similar(active_embedder(), a, b, threshold);
}

const Embedding& EmbeddingCache::get(const std::string& text) const {
  auto it = memo_.find(text);
  if (it != memo_.end()) return it->second;
  auto [pos, _] = memo_.emplace(text, embedder_.embed(text));
  return pos->second;
}

double EmbeddingCache::cosine_between(const std::string& a, const std::string& b) const {
  return cosine(get(a), get(b)).value;
}

}  // namespace hera
