#include "hera/generator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <stdexcept>

#include "hera/rng.hpp"

namespace hera {

void GeneratorConfig::validate() const {
  if (n_requests < 1) throw std::invalid_argument("n_requests must be >= 1");
  if (llm_len_mean < 1.0 || slm_len_mean < 1.0)
    throw std::invalid_argument("path length means must be >= 1");
  if (slm_len_mean < llm_len_mean)
    throw std::invalid_argument("slm_len_mean must be >= llm_len_mean");
  for (double f : {matched_final_fraction, llm_correct_rate, p_cd_stretch})
    if (f < 0.0 || f > 1.0) throw std::invalid_argument("fractions must be in [0,1]");
  if (token_len < 6) throw std::invalid_argument("token_len must be >= 6");
  if (vocab_size < 4 * token_len) throw std::invalid_argument("vocab_size too small for token_len");
  if (depth_cap < 6) throw std::invalid_argument("depth_cap too small for generation");
}

namespace {

// Per-request pool of tokens with pairwise distinct embedder buckets.
class TokenPool {
 public:
  TokenPool(SplitMix64& rng, int size) {
    const HashedBagEmbedder& emb = static_cast<const HashedBagEmbedder&>(builtin_embedder());
    std::set<int> used;
    int attempts = 0;
    const int max_attempts = size * 64;
    while (static_cast<int>(tokens_.size()) < size && attempts < max_attempts) {
      ++attempts;
      char buf[24];
      std::snprintf(buf, sizeof(buf), "w%llx", static_cast<unsigned long long>(rng.next() >> 16));
      std::string tok(buf);
      int b = emb.token_bucket(tok);
      if (used.insert(b).second) tokens_.push_back(std::move(tok));
    }
  }

  std::vector<std::string> fresh(int n) {
    std::vector<std::string> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
      out.push_back(tokens_[cursor_ % tokens_.size()]);
      ++cursor_;
    }
    return out;
  }

 private:
  std::vector<std::string> tokens_;
  size_t cursor_ = 0;
};

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

// Text sharing the first `shared` tokens of `base`, padded with fresh tokens.
std::string blend_text(const std::vector<std::string>& base, int shared, int total,
                       TokenPool& pool) {
  std::vector<std::string> tokens(base.begin(), base.begin() + std::min<size_t>(shared, base.size()));
  for (std::string& t : pool.fresh(total - static_cast<int>(tokens.size())))
    tokens.push_back(std::move(t));
  return join_tokens(tokens);
}

enum class StagePos { Early, Mid, Late };

StagePos stage_of(int unit, int L) {
  if (unit <= L / 3.0) return StagePos::Early;
  if (unit <= 2.0 * L / 3.0) return StagePos::Mid;
  return StagePos::Late;
}

struct UnitSpec {
  int level = 0;  // shared-token count of slm_content vs llm_content
  int g = 1;      // segment length (lead_in count + 1)
  bool reserved = false;
};

}  // namespace

Workload generate_workload(const GeneratorConfig& cfg) {
  cfg.validate();
  const int T = cfg.token_len;
  auto level_of = [T](double sim) {
    return std::clamp(static_cast<int>(std::llround(sim * T)), 1, T);
  };
  const int lvl_early = level_of(cfg.sim_early);
  const int lvl_mid = level_of(cfg.sim_mid);
  const int lvl_late = level_of(cfg.sim_late);
  const int lvl_safe = level_of(0.75);        // committed-similarity islands
  const int lvl_loose = level_of(2.0 / 3.0);  // passes only early adaptive thresholds
  const int lvl_hard = level_of(0.417);
  const int lvl_hard_late = level_of(1.0 / 3.0);
  const int lvl_lead = level_of(0.417);
  const int lvl_lead_hi = level_of(2.0 / 3.0);

  // Scale structure probabilities so the mean extra SLM steps per request
  // track slm_len_mean - llm_len_mean (defaults calibrated to 1.1).
  double scale = (cfg.slm_len_mean - cfg.llm_len_mean) / 1.1;
  double p_block = std::min(cfg.p_sle_block * scale, 0.45);
  double p_sd3 = std::min(cfg.p_sd3 * scale, 0.45);
  double p_sd2 = std::min(cfg.p_sd2 * scale, 0.45);

  const int len_shift = static_cast<int>(std::llround(cfg.llm_len_mean - 5.8));

  std::vector<RequestProfile> profiles;
  profiles.reserve(cfg.n_requests);

  for (int i = 0; i < cfg.n_requests; ++i) {
    SplitMix64 rng(mix_seed(cfg.seed, static_cast<uint64_t>(i)));
    TokenPool pool(rng, cfg.vocab_size);

    // LLM path length: discrete law with mean 5.8, shifted by config.
    double r = rng.u01();
    int L = r < 0.10 ? 4 : r < 0.40 ? 5 : r < 0.75 ? 6 : r < 0.95 ? 7 : 8;
    L = std::clamp(L + len_shift, 3, std::min(9, cfg.depth_cap - 5));

    bool matched = rng.bernoulli(cfg.matched_final_fraction);
    bool llm_correct = rng.bernoulli(cfg.llm_correct_rate);

    std::vector<UnitSpec> spec(L + 1);  // 1-based
    if (matched) {
      for (int u = 1; u <= L; ++u) {
        StagePos st = stage_of(u, L);
        spec[u].level = st == StagePos::Early ? lvl_early : st == StagePos::Mid ? lvl_mid : lvl_late;
      }
    } else {
      int k_a = 1 + static_cast<int>(rng.below(3));  // A-prefix length 1..3
      k_a = std::min(k_a, L - 1);
      for (int u = 1; u <= L; ++u) {
        if (u <= k_a) {
          spec[u].level = (u >= 2 && u <= 3 && rng.bernoulli(0.4)) ? lvl_loose : lvl_safe;
        } else {
          spec[u].level = stage_of(u, L) == StagePos::Late ? lvl_hard_late : lvl_hard;
        }
      }
      // Convergence stretch: a short divergent run that re-joins, followed
      // by enough safe units to absorb the detector's forward commit.
      if (L >= 6 && rng.bernoulli(cfg.p_cd_stretch)) {
        int a = std::max(2, k_a + 1);
        int len_low = rng.bernoulli(0.5) ? 2 : 1;
        int b = a + len_low;
        if (b + 2 <= L - 1) {
          for (int u = a; u < b; ++u) spec[u].level = lvl_hard;
          for (int u = b; u <= b + 2; ++u) {
            spec[u].level = lvl_safe;
            spec[u].reserved = true;
          }
          for (int u = std::max(2, a - 1); u < b; ++u) spec[u].reserved = true;
        }
      }
    }

    // Granularity structures: a lookahead block (two consecutive g=2 units),
    // or a decomposable unit (g=2 or g=3), each ending in a safe follower.
    double rs = rng.u01();
    int want = rs < p_block ? 1 : rs < p_block + p_sd3 ? 2 : rs < p_block + p_sd3 + p_sd2 ? 3 : 0;
    int limit = matched ? L : L - 1;  // unmatched requests keep the last unit divergent
    auto free_span = [&](int from, int len) {
      if (from < 2 || from + len - 1 > limit) return false;
      for (int u = from; u < from + len; ++u)
        if (spec[u].reserved) return false;
      return true;
    };
    auto ensure_safe = [&](int u) {
      if (!matched && spec[u].level < lvl_safe) spec[u].level = lvl_safe;
      spec[u].reserved = true;
    };
    // Units whose segment is only reachable through a cascade decision sit
    // at position >= 3 (the first subtask always executes on the LLM).
    bool placed = false;
    if (want == 1) {
      for (int p = 2; !placed && p + 2 <= limit; ++p) {
        if (!free_span(p, 3)) continue;
        spec[p].g = spec[p + 1].g = 2;
        ensure_safe(p);
        ensure_safe(p + 1);
        ensure_safe(p + 2);
        placed = true;
      }
      if (!placed) want = 3;  // fall back to the small decomposable unit
    }
    if (want == 2) {
      // The mid-blend level only clears early adaptive thresholds, so the
      // three-step decomposition stays near the front of the request.
      for (int q = 3; !placed && q <= std::min(4, limit - 1); ++q) {
        if (!free_span(q, 2)) continue;
        spec[q].g = 3;
        ensure_safe(q);
        ensure_safe(q + 1);
        placed = true;
      }
      if (!placed) want = 3;
    }
    if (want == 3 && !placed) {
      for (int q = 3; !placed && q + 1 <= limit; ++q) {
        if (!free_span(q, 2)) continue;
        spec[q].g = 2;
        ensure_safe(q);
        ensure_safe(q + 1);
        placed = true;
      }
    }

    // Texts.
    RequestProfile profile;
    profile.request.id = [&] {
      char buf[16];
      std::snprintf(buf, sizeof(buf), "r%05d", i);
      return std::string(buf);
    }();
    profile.request.text = "request " + profile.request.id + " " + join_tokens(pool.fresh(3));

    profile.units.resize(L);
    std::vector<std::vector<std::string>> llm_tokens(L);
    for (int u = 1; u <= L; ++u) {
      UnitPlan& plan = profile.units[u - 1];
      llm_tokens[u - 1] = pool.fresh(T);
      plan.llm_content = join_tokens(llm_tokens[u - 1]);
      plan.slm_content = blend_text(llm_tokens[u - 1], spec[u].level, T, pool);
      if (spec[u].g == 2) {
        plan.lead_in.push_back(blend_text(llm_tokens[u - 1], lvl_lead, T, pool));
      } else if (spec[u].g == 3) {
        plan.lead_in.push_back(blend_text(llm_tokens[u - 1], lvl_lead, T, pool));
        plan.lead_in.push_back(blend_text(llm_tokens[u - 1], lvl_lead_hi, T, pool));
      }
    }

    // Finals and ground truth.
    std::vector<std::string> gt_tokens = pool.fresh(T);
    profile.request.ground_truth = join_tokens(gt_tokens);
    int llm_share = llm_correct ? T - 1 : level_of(1.0 / 3.0);
    std::vector<std::string> llm_final_tokens(gt_tokens.begin(), gt_tokens.begin() + llm_share);
    for (std::string& t : pool.fresh(T - llm_share)) llm_final_tokens.push_back(std::move(t));
    profile.llm_final = join_tokens(llm_final_tokens);

    int q = matched ? (T - 3 + static_cast<int>(rng.below(2)))         // 9..10 of 12
                    : (level_of(0.417) + static_cast<int>(rng.below(4)));  // 5..8 of 12
    profile.slm_final = blend_text(llm_final_tokens, q, T, pool);

    std::vector<std::string> junk = pool.fresh(T);
    profile.final_variants.push_back(profile.llm_final);
    for (int k = 1; k <= 8; ++k) {
      int share = std::max(llm_share - k, 2);
      std::vector<std::string> toks(gt_tokens.begin(), gt_tokens.begin() + share);
      for (int j = 0; j < T - share; ++j) toks.push_back(junk[j]);
      profile.final_variants.push_back(join_tokens(toks));
    }
    profiles.push_back(std::move(profile));
  }

  // Measured similarities (exact shared-token fractions by construction).
  EmbeddingCache cache(builtin_embedder());
  for (RequestProfile& p : profiles) {
    p.final_match_sim = cache.cosine_between(p.slm_final, p.llm_final);
    for (UnitPlan& u : p.units) {
      u.match_sim = cache.cosine_between(u.slm_content, u.llm_content);
      u.lead_sims.clear();
      for (const std::string& e : u.lead_in)
        u.lead_sims.push_back(cache.cosine_between(e, u.llm_content));
    }
  }

  Workload wl;
  wl.config = cfg;
  wl.store = std::make_shared<TraceStore>(TraceStore::from_profiles(std::move(profiles)));
  return wl;
}

std::vector<UserRequest> Workload::requests() const {
  std::vector<UserRequest> out;
  out.reserve(store->profiles().size());
  for (const RequestProfile& p : store->profiles()) out.push_back(p.request);
  return out;
}

std::vector<SubtaskTrace> Workload::traces(bool with_branches) const {
  std::vector<SubtaskTrace> out;
  out.reserve(store->profiles().size());
  for (const RequestProfile& p : store->profiles()) {
    SubtaskTrace t;
    t.request = p.request;
    t.llm_path = p.llm_path();
    t.slm_path = p.slm_path();
    t.llm_final = p.llm_final;
    t.slm_final = p.slm_final;
    if (with_branches) t.mixed_branches = materialize_branches(p, config.depth_cap);
    validate_trace(t, config.depth_cap);
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace hera
