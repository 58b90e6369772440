#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <set>

#include "hera/generator.hpp"
#include "hera/world.hpp"

using namespace hera;

TEST_CASE("generation is deterministic: identical JSONL bytes") {
  GeneratorConfig cfg;
  cfg.seed = 42;
  cfg.n_requests = 30;
  std::string a = traces_to_jsonl(generate_workload(cfg).traces(true));
  std::string b = traces_to_jsonl(generate_workload(cfg).traces(true));
  CHECK(a == b);
  CHECK(!a.empty());
}

TEST_CASE("population statistics converge to the configured targets") {
  GeneratorConfig cfg;
  cfg.seed = 9;
  cfg.n_requests = 2000;
  Workload wl = generate_workload(cfg);
  double lsum = 0, ssum = 0;
  int matched = 0;
  for (const RequestProfile& p : wl.store->profiles()) {
    lsum += p.llm_len();
    ssum += p.slm_len();
    matched += p.final_match_sim >= 0.7 ? 1 : 0;
  }
  double n = cfg.n_requests;
  CHECK(std::abs(lsum / n - 5.8) <= 0.15);
  CHECK(std::abs(ssum / n - 6.9) <= 0.12);
  // binomial 3*SE around 0.21 at n=2000 is ~0.027
  CHECK(std::abs(matched / n - 0.21) <= 0.03);
}

TEST_CASE("matched_final_fraction zero makes every final pair dissimilar") {
  GeneratorConfig cfg;
  cfg.seed = 3;
  cfg.n_requests = 80;
  cfg.matched_final_fraction = 0.0;
  Workload wl = generate_workload(cfg);
  for (const RequestProfile& p : wl.store->profiles()) CHECK(p.final_match_sim < 0.7);
}

TEST_CASE("every generated trace validates, with and without branches") {
  GeneratorConfig cfg;
  cfg.seed = 4;
  cfg.n_requests = 40;
  Workload wl = generate_workload(cfg);
  for (const SubtaskTrace& t : wl.traces(false)) CHECK_NOTHROW(validate_trace(t));
  for (const SubtaskTrace& t : wl.traces(true)) CHECK_NOTHROW(validate_trace(t));
}

TEST_CASE("request ids are unique and ground truth is present") {
  GeneratorConfig cfg;
  cfg.seed = 5;
  cfg.n_requests = 50;
  Workload wl = generate_workload(cfg);
  std::set<std::string> ids;
  for (const UserRequest& r : wl.requests()) {
    CHECK(ids.insert(r.id).second);
    CHECK(!r.text.empty());
    CHECK(r.ground_truth.has_value());
  }
}

TEST_CASE("trace world with stored branches replays the generative world exactly") {
  GeneratorConfig cfg;
  cfg.seed = 21;
  cfg.n_requests = 25;
  Workload wl = generate_workload(cfg);
  ProfileWorld generative(wl.store);
  TraceWorld replay(wl.traces(true));

  // Walk every branch of both worlds in lockstep.
  std::function<void(WorldSession&, WorldSession&, int)> walk =
      [&](WorldSession& a, WorldSession& b, int depth) {
        REQUIRE(a.finished() == b.finished());
        if (a.finished()) {
          CHECK(a.final_output() == b.final_output());
          return;
        }
        CHECK(a.current().content == b.current().content);
        if (depth >= 15) return;
        for (ModelKind m : {ModelKind::SLM, ModelKind::LLM}) {
          auto ca = a.clone();
          auto cb = b.clone();
          ca->execute(m);
          cb->execute(m);
          walk(*ca, *cb, depth + 1);
        }
      };
  for (const UserRequest& r : wl.requests()) {
    auto a = generative.open(r.id, ModelKind::LLM);
    auto b = replay.open(r.id, ModelKind::LLM);
    walk(*a, *b, 0);

    // Pure SLM replay agrees too.
    auto sa = generative.open(r.id, ModelKind::SLM);
    auto sb = replay.open(r.id, ModelKind::SLM);
    while (!sa->finished()) {
      REQUIRE_FALSE(sb->finished());
      CHECK(sa->current().content == sb->current().content);
      sa->execute(ModelKind::SLM);
      sb->execute(ModelKind::SLM);
    }
    CHECK(sb->finished());
    CHECK(sa->final_output() == sb->final_output());
  }
}

TEST_CASE("profiles reconstructed from branch-bearing traces keep the unit structure") {
  GeneratorConfig cfg;
  cfg.seed = 31;
  cfg.n_requests = 20;
  Workload wl = generate_workload(cfg);
  EmbeddingCache cache(builtin_embedder());
  auto traces = wl.traces(true);
  for (size_t i = 0; i < traces.size(); ++i) {
    const RequestProfile& plan = wl.store->profiles()[i];
    RequestProfile rec = profile_from_trace(traces[i], cache);
    REQUIRE(rec.units.size() == plan.units.size());
    for (size_t u = 0; u < plan.units.size(); ++u) {
      CHECK(rec.units[u].llm_content == plan.units[u].llm_content);
      if (u > 0) {  // the root unit's SLM variant is never reached by the tree
        CHECK(rec.units[u].slm_content == plan.units[u].slm_content);
        CHECK(rec.units[u].lead_in == plan.units[u].lead_in);
      }
    }
  }
}

TEST_CASE("branch chains respect the depth cap") {
  GeneratorConfig cfg;
  cfg.seed = 6;
  cfg.n_requests = 60;
  Workload wl = generate_workload(cfg);
  for (const SubtaskTrace& t : wl.traces(true)) {
    for (const auto& [prefix, node] : t.mixed_branches)
      CHECK(static_cast<int>(prefix.size()) <= cfg.depth_cap);
  }
}

TEST_CASE("generator validates its configuration") {
  GeneratorConfig cfg;
  cfg.n_requests = 0;
  CHECK_THROWS_AS(generate_workload(cfg), std::invalid_argument);
  cfg.n_requests = 10;
  cfg.slm_len_mean = 4.0;  // below llm_len_mean
  CHECK_THROWS_AS(generate_workload(cfg), std::invalid_argument);
}

TEST_CASE("length means follow the configured targets when shifted") {
  GeneratorConfig cfg;
  cfg.seed = 12;
  cfg.n_requests = 600;
  cfg.llm_len_mean = 4.8;
  cfg.slm_len_mean = 5.9;
  Workload wl = generate_workload(cfg);
  double lsum = 0;
  for (const RequestProfile& p : wl.store->profiles()) lsum += p.llm_len();
  CHECK(std::abs(lsum / cfg.n_requests - 4.8) <= 0.25);
}
