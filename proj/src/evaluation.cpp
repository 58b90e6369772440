#include "hera/evaluation.hpp"

#include <algorithm>
#include <cmath>

#include "hera/rng.hpp"

namespace hera {

bool Judge::correct(const std::string& final_output,
                    const std::optional<std::string>& ground_truth) const {
  if (!ground_truth || final_output.empty()) return false;
  if (kind == Kind::Exact) return final_output == *ground_truth;
  return is_similar(final_output, *ground_truth, threshold);
}

long approx_token_count(const std::string& text) {
  long words = 0;
  bool in_word = false;
  for (char c : text) {
    bool space = c == ' ' || c == '\t' || c == '\n';
    if (!space && !in_word) ++words;
    in_word = !space;
  }
  return std::lround(static_cast<double>(words) * 4.0 / 3.0);
}

double cost_of(const std::vector<ExecutedUnit>& units, const CostModel& model) {
  double usd = 0.0;
  for (const ExecutedUnit& u : units) {
    if (u.choice != ModelKind::LLM) continue;
    usd += approx_token_count(u.subtask.content) / 1000.0 * model.llm_usd_per_1k_prompt_tokens;
    usd += approx_token_count(u.output) / 1000.0 * model.llm_usd_per_1k_completion_tokens;
  }
  return usd;
}

double cost_of(const RoutedExecution& execution, const CostModel& model) {
  return cost_of(execution.executed, model);
}

Policy Policy::random(double p_llm, uint64_t seed) {
  Policy p{Kind::Random};
  p.p_llm = p_llm;
  p.seed = seed;
  return p;
}

Policy Policy::classifier(double threshold) {
  Policy p{Kind::Classifier};
  p.threshold = threshold;
  return p;
}

Policy Policy::hera_policy(RouterConfig config) {
  Policy p{Kind::Hera};
  p.hera = std::move(config);
  return p;
}

std::string Policy::label() const {
  char buf[64];
  switch (kind) {
    case Kind::AllSlm: return "all_slm";
    case Kind::AllLlm: return "all_llm";
    case Kind::Random:
      std::snprintf(buf, sizeof(buf), "random_%.2f", p_llm);
      return buf;
    case Kind::Classifier:
      std::snprintf(buf, sizeof(buf), "classifier_%.2f", threshold);
      return buf;
    case Kind::Hera: return "hera";
  }
  return "?";
}

namespace {

const EmbeddingCache& shared_cache() {
  // Rebuilt when the active embedder changes (set once at startup).
  static std::unique_ptr<EmbeddingCache> cache;
  static const Embedder* backing = nullptr;
  if (!cache || backing != &active_embedder()) {
    backing = &active_embedder();
    cache = std::make_unique<EmbeddingCache>(*backing);
  }
  return *cache;
}

RequestOutcome run_fixed_or_random(const Policy& policy, const PredictorSuite& suite,
                                   const ExecutionWorld& world, const UserRequest& request,
                                   int depth_cap) {
  RequestOutcome oc;
  oc.request_id = request.id;

  ModelKind root = policy.kind == Policy::Kind::AllSlm ? ModelKind::SLM : ModelKind::LLM;
  std::unique_ptr<WorldSession> session;
  try {
    session = world.open(request.id, root);
  } catch (const std::exception&) {
    return oc;  // incomplete, not a crash
  }

  SplitMix64 rng(mix_seed(policy.seed, hash64(request.id)));
  while (!session->finished() && static_cast<int>(oc.units.size()) < depth_cap) {
    ModelKind choice = ModelKind::LLM;
    switch (policy.kind) {
      case Policy::Kind::AllSlm: choice = ModelKind::SLM; break;
      case Policy::Kind::AllLlm: choice = ModelKind::LLM; break;
      case Policy::Kind::Random:
        choice = rng.bernoulli(policy.p_llm) ? ModelKind::LLM : ModelKind::SLM;
        break;
      case Policy::Kind::Classifier: {
        choice = ModelKind::LLM;
        auto a = suite.sp_predict(ModelKind::SLM, session->current());
        auto b = suite.sp_predict(ModelKind::LLM, session->current());
        if (a && b &&
            shared_cache().cosine_between(a->content, b->content) >= policy.threshold)
          choice = ModelKind::SLM;
        break;
      }
      case Policy::Kind::Hera: break;  // handled elsewhere
    }
    Subtask cur = session->current();
    session->execute(choice);
    oc.units.push_back(ExecutedUnit{
        std::move(cur), choice,
        session->finished() ? session->final_output() : session->current().content});
    oc.assignment.choices.push_back(choice);
  }
  oc.finished = session->finished();
  if (oc.finished) oc.final_output = session->final_output();
  return oc;
}

}  // namespace

PolicyRun run_policy_detailed(const Policy& policy, const PredictorSuite& suite,
                              const ExecutionWorld& world,
                              const std::vector<UserRequest>& workload,
                              const EvalSettings& settings) {
  if (workload.empty()) throw std::invalid_argument("run_policy requires a non-empty workload");

  PolicyRun run;
  run.outcomes.reserve(workload.size());

  for (const UserRequest& request : workload) {
    RequestOutcome oc;
    if (policy.kind == Policy::Kind::Hera) {
      RouterConfig cfg = policy.hera;
      cfg.depth_cap = std::min(cfg.depth_cap, settings.depth_cap);
      RoutedExecution rx = route_request(cfg, suite, world, request);
      oc.request_id = rx.request_id;
      oc.assignment = rx.assignment();
      oc.units = rx.executed;
      oc.final_output = rx.final_output;
      oc.finished = rx.finished;
      oc.decisions = rx.decisions;
    } else {
      oc = run_fixed_or_random(policy, suite, world, request, settings.depth_cap);
    }

    for (const ExecutedUnit& u : oc.units)
      oc.latency_s += settings.latency.call_latency(u.choice);
    oc.cost_usd = cost_of(oc.units, settings.cost);
    oc.correct = oc.finished && settings.judge.correct(oc.final_output, request.ground_truth);
    run.outcomes.push_back(std::move(oc));
  }

  PolicyReport& rep = run.report;
  rep.policy = policy.label();
  rep.requests = static_cast<int>(run.outcomes.size());
  for (const RequestOutcome& oc : run.outcomes) {
    rep.accuracy += oc.correct ? 1.0 : 0.0;
    rep.slm_usage += oc.units.empty() ? 0.0 : oc.assignment.slm_fraction();
    bool completed = oc.finished && oc.latency_s <= settings.latency.budget_s;
    rep.completion_rate += completed ? 1.0 : 0.0;
    rep.avg_subtasks += static_cast<double>(oc.units.size());
    rep.cost_usd += oc.cost_usd;
    rep.sim_latency_s += oc.latency_s;
  }
  double n = static_cast<double>(rep.requests);
  rep.accuracy /= n;
  rep.slm_usage /= n;
  rep.completion_rate /= n;
  rep.avg_subtasks /= n;
  rep.cost_usd /= n;
  rep.sim_latency_s /= n;
  return run;
}

PolicyReport run_policy(const Policy& policy, const PredictorSuite& suite,
                        const ExecutionWorld& world, const std::vector<UserRequest>& workload,
                        const EvalSettings& settings) {
  return run_policy_detailed(policy, suite, world, workload, settings).report;
}

// ---------------------------------------------------------------------------
// Oracle

namespace {

struct Candidate {
  std::string bits;
  std::string final_output;
  int slm = 0;

  double usage() const { return bits.empty() ? 0.0 : static_cast<double>(slm) / bits.size(); }
};

// usage desc, then later-SLM preference, then lexicographically smallest.
bool better_candidate(const Candidate& a, const Candidate& b) {
  long lhs = static_cast<long>(a.slm) * static_cast<long>(b.bits.size());
  long rhs = static_cast<long>(b.slm) * static_cast<long>(a.bits.size());
  if (lhs != rhs) return lhs > rhs;
  auto late_weight = [](const std::string& bits) {
    long w = 0;
    for (size_t i = 0; i < bits.size(); ++i)
      if (bits[i] == '0') w += static_cast<long>(i) + 1;
    return w;
  };
  long wa = late_weight(a.bits), wb = late_weight(b.bits);
  if (wa != wb) return wa > wb;
  return a.bits < b.bits;
}

void dfs_assignments(const WorldSession& session, std::string& bits, int slm, int depth_cap,
                     const Judge& judge, const std::optional<std::string>& gt,
                     std::optional<Candidate>& best, long& nodes) {
  ++nodes;
  if (session.finished()) {
    if (!judge.correct(session.final_output(), gt)) return;
    Candidate c{bits, session.final_output(), slm};
    if (!best || better_candidate(c, *best)) best = std::move(c);
    return;
  }
  if (static_cast<int>(bits.size()) >= depth_cap) return;  // unfinished: infeasible
  for (ModelKind choice : {ModelKind::SLM, ModelKind::LLM}) {
    auto child = session.clone();
    child->execute(choice);
    bits.push_back(model_bit(choice));
    dfs_assignments(*child, bits, slm + (choice == ModelKind::SLM ? 1 : 0), depth_cap, judge,
                    gt, best, nodes);
    bits.pop_back();
  }
}

Candidate run_all_llm(const ExecutionWorld& world, const UserRequest& request, int depth_cap) {
  Candidate c;
  auto session = world.open(request.id, ModelKind::LLM);
  while (!session->finished() && static_cast<int>(c.bits.size()) < depth_cap) {
    session->execute(ModelKind::LLM);
    c.bits.push_back('1');
  }
  c.final_output = session->finished() ? session->final_output() : "";
  return c;
}

std::optional<Candidate> beam_search(const ExecutionWorld& world, const UserRequest& request,
                                     const OracleOptions& opt) {
  struct Node {
    std::unique_ptr<WorldSession> session;
    std::string bits;
    int slm = 0;
  };
  std::vector<Node> beam;
  {
    Node root;
    root.session = world.open(request.id, ModelKind::LLM);
    beam.push_back(std::move(root));
  }
  std::optional<Candidate> best;
  while (!beam.empty()) {
    std::vector<Node> next;
    for (Node& node : beam) {
      for (ModelKind choice : {ModelKind::SLM, ModelKind::LLM}) {
        Node child;
        child.session = node.session->clone();
        child.session->execute(choice);
        child.bits = node.bits + model_bit(choice);
        child.slm = node.slm + (choice == ModelKind::SLM ? 1 : 0);
        if (child.session->finished()) {
          if (opt.judge.correct(child.session->final_output(), request.ground_truth)) {
            Candidate c{child.bits, child.session->final_output(), child.slm};
            if (!best || better_candidate(c, *best)) best = std::move(c);
          }
        } else if (static_cast<int>(child.bits.size()) < opt.depth_cap) {
          next.push_back(std::move(child));
        }
      }
    }
    std::sort(next.begin(), next.end(), [](const Node& a, const Node& b) {
      if (a.slm != b.slm) return a.slm > b.slm;
      return a.bits < b.bits;
    });
    if (static_cast<int>(next.size()) > opt.beam_width) next.resize(opt.beam_width);
    beam = std::move(next);
  }
  return best;
}

}  // namespace

OracleResult oracle_assign(const ExecutionWorld& world, const UserRequest& request,
                           const OracleOptions& options) {
  OracleResult result;

  // Probe the all-SLM chain length to decide whether exhaustive enumeration
  // stays tractable (it is the longest branch of the tree).
  int longest = 0;
  {
    auto session = world.open(request.id, ModelKind::LLM);
    while (!session->finished() && longest < options.depth_cap) {
      session->execute(ModelKind::SLM);
      ++longest;
    }
  }

  std::optional<Candidate> best;
  if (longest <= options.exhaustive_cap) {
    auto session = world.open(request.id, ModelKind::LLM);
    std::string bits;
    long nodes = 0;
    dfs_assignments(*session, bits, 0, options.depth_cap, options.judge, request.ground_truth,
                    best, nodes);
  } else {
    best = beam_search(world, request, options);
    result.approximate = true;
  }

  if (!best) {
    Candidate fallback = run_all_llm(world, request, options.depth_cap);
    result.floor_unreachable = true;
    best = std::move(fallback);
  }

  result.final_output = best->final_output;
  result.units = static_cast<int>(best->bits.size());
  result.slm_usage = best->usage();
  result.correct = options.judge.correct(best->final_output, request.ground_truth);
  result.assignment.choices.reserve(best->bits.size());
  for (char b : best->bits)
    result.assignment.choices.push_back(b == '0' ? ModelKind::SLM : ModelKind::LLM);
  return result;
}

WorkloadOracle oracle_workload(const ExecutionWorld& world,
                               const std::vector<UserRequest>& workload,
                               const OracleOptions& options, bool workload_level) {
  if (workload.empty()) throw std::invalid_argument("oracle_workload requires requests");
  WorkloadOracle out;
  out.criterion = workload_level ? "workload" : "per-request";
  out.per_request.reserve(workload.size());

  int correct = 0;
  int all_llm_correct = 0;
  for (const UserRequest& r : workload) {
    OracleResult res = oracle_assign(world, r, options);
    Candidate all_llm = run_all_llm(world, r, options.depth_cap);
    if (options.judge.correct(all_llm.final_output, r.ground_truth)) ++all_llm_correct;
    correct += res.correct ? 1 : 0;
    out.per_request.push_back(std::move(res));
  }

  double all_llm_acc = static_cast<double>(all_llm_correct) / workload.size();
  out.floor_value = options.accuracy_floor_frac * all_llm_acc;

  if (workload_level) {
    // Greedy relaxation: release correctness-constrained requests to their
    // max-SLM assignment while the workload stays at or above the floor.
    int floor_count =
        static_cast<int>(std::ceil(out.floor_value * static_cast<double>(workload.size()) - 1e-9));
    struct Gain {
      size_t index;
      double gain;
    };
    std::vector<Gain> gains;
    for (size_t i = 0; i < out.per_request.size(); ++i) {
      const OracleResult& r = out.per_request[i];
      if (r.correct && r.slm_usage < 1.0) gains.push_back({i, 1.0 - r.slm_usage});
    }
    std::sort(gains.begin(), gains.end(), [](const Gain& a, const Gain& b) {
      if (a.gain != b.gain) return a.gain > b.gain;
      return a.index < b.index;
    });
    for (const Gain& g : gains) {
      if (correct - 1 < floor_count) break;
      OracleResult& r = out.per_request[g.index];
      // Max-SLM assignment: the all-SLM branch of this request's tree.
      auto session = world.open(workload[g.index].id, ModelKind::LLM);
      Assignment a;
      while (!session->finished() && static_cast<int>(a.choices.size()) < options.depth_cap) {
        session->execute(ModelKind::SLM);
        a.choices.push_back(ModelKind::SLM);
      }
      bool now_correct = session->finished() &&
                         options.judge.correct(session->final_output(), workload[g.index].ground_truth);
      if (now_correct) continue;  // all-SLM already correct: nothing to relax
      r.assignment = std::move(a);
      r.final_output = session->finished() ? session->final_output() : "";
      r.units = static_cast<int>(r.assignment.choices.size());
      r.slm_usage = r.assignment.slm_fraction();
      r.correct = false;
      --correct;
    }
  }

  out.accuracy = static_cast<double>(correct) / workload.size();
  return out;
}

double incorrect_assignment_rate(const std::vector<Assignment>& policy_decisions,
                                 const std::vector<Assignment>& oracle_decisions) {
  if (policy_decisions.empty() || policy_decisions.size() != oracle_decisions.size())
    throw std::invalid_argument("incorrect_assignment_rate requires paired assignments");
  long mismatches = 0;
  long total = 0;
  for (size_t i = 0; i < policy_decisions.size(); ++i) {
    const auto& a = policy_decisions[i].choices;
    const auto& b = oracle_decisions[i].choices;
    size_t overlap = std::min(a.size(), b.size());
    for (size_t j = 0; j < overlap; ++j)
      if (a[j] != b[j]) ++mismatches;
    mismatches += static_cast<long>(std::max(a.size(), b.size()) - overlap);
    total += static_cast<long>(std::max(a.size(), b.size()));
  }
  return total == 0 ? 0.0 : static_cast<double>(mismatches) / static_cast<double>(total);
}

CptValue cpt(const CptCurve& curve, double x_percent) {
  if (x_percent <= 0.0 || x_percent > 100.0)
    throw std::invalid_argument("x_percent must be in (0,100]");
  CptValue out;
  if (curve.degenerate()) {
    out.degenerate = true;
    out.value = 0.0;
    return out;
  }
  double target = curve.gap_low + x_percent / 100.0 * (curve.gap_high - curve.gap_low);
  std::vector<std::pair<double, double>> pts = curve.points;
  std::sort(pts.begin(), pts.end());
  for (const auto& [fraction, accuracy] : pts) {
    if (accuracy >= target - 1e-12) {
      out.value = fraction;
      return out;
    }
  }
  out.attainable = false;
  out.value = 1.0;
  return out;
}

}  // namespace hera
