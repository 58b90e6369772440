#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hera/generator.hpp"
#include "hera/predictors.hpp"

using namespace hera;

namespace {

std::vector<Subtask> path_of(std::vector<std::string> contents, ModelKind producer) {
  std::vector<Subtask> out;
  int seq = 1;
  for (std::string& c : contents) out.push_back(Subtask{seq++, std::move(c), producer});
  return out;
}

SubtaskTrace fig5_trace() {
  SubtaskTrace t;
  t.request.id = "fig5";
  t.request.text = "layered question";
  t.llm_path = path_of({"a1 a2 a3 a4", "b1 b2 b3 b4", "c1 c2 c3 c4"}, ModelKind::LLM);
  t.slm_path = path_of({"d1 d2 d3 d4", "a1 a2 a3 sx2", "e1 e2 e3 e4", "f1 f2 f3 f4",
                        "b1 b2 b3 sx5", "c1 c2 c3 sx6"},
                       ModelKind::SLM);
  t.slm_final = "answer x y z";
  t.llm_final = "answer x y q";
  return t;
}

SubtaskTrace titanic_trace() {
  SubtaskTrace t;
  t.request.id = "titanic";
  t.request.text = "Who was the maternal grandfather of the person who directed the 1997 film "
                   "Titanic?";
  t.llm_path = path_of({"Identify the director of Titanic (1997)", "Find the director's mother",
                        "Determine the mother's father"},
                       ModelKind::LLM);
  t.slm_path = path_of({"Identify the director of Titanic (1997)", "Find the director's mother",
                        "Determine the mother's father"},
                       ModelKind::SLM);
  t.slm_final = "the grandfather";
  t.llm_final = "the grandfather";
  return t;
}

std::shared_ptr<const TraceStore> store_of(std::vector<SubtaskTrace> traces) {
  return std::make_shared<TraceStore>(TraceStore::from_traces(traces));
}

}  // namespace

TEST_CASE("urc returns the final-output similarity of the backing trace") {
  TraceBackedSuite suite(store_of({fig5_trace(), titanic_trace()}));

  SUBCASE("identical finals score 1.0") {
    UserRequest r{"titanic", "q", std::nullopt};
    CHECK(urc_predict(suite, r).value == doctest::Approx(1.0));
  }
  SUBCASE("disjoint-vocabulary finals score 0.0") {
    SubtaskTrace t = fig5_trace();
    t.request.id = "disjoint";
    t.slm_final = "alpha bravo charlie";
    t.llm_final = "delta echo foxtrot";
    TraceBackedSuite s2(store_of({t}));
    UserRequest r{"disjoint", "q", std::nullopt};
    CHECK(urc_predict(s2, r).value == doctest::Approx(0.0));
  }
  SUBCASE("unknown request raises no profile") {
    UserRequest r{"nobody", "q", std::nullopt};
    CHECK_THROWS_AS(urc_predict(suite, r), NoProfileError);
    CHECK_FALSE(suite.urc_predict(r).has_value());
  }
}

TEST_CASE("sp follows the corresponding path") {
  SubtaskTrace t = titanic_trace();
  TraceBackedSuite suite(store_of({t}));

  SUBCASE("llm lookup returns the next llm entry") {
    Subtask next = sp_predict(suite, ModelKind::LLM, t.llm_path[1]);
    CHECK(next.content == t.llm_path[2].content);
    CHECK(next.seq_id == t.llm_path[1].seq_id + 1);
    CHECK(next.producer == ModelKind::LLM);
  }
  SUBCASE("the first subtask predicts the second") {
    Subtask cur{1, "Identify the director of Titanic (1997)", ModelKind::LLM};
    CHECK(sp_predict(suite, ModelKind::LLM, cur).content == "Find the director's mother");
  }
  SUBCASE("the last subtask is exhausted") {
    CHECK_THROWS_AS(sp_predict(suite, ModelKind::SLM, t.slm_path.back()), SequenceExhausted);
    CHECK_FALSE(suite.sp_predict(ModelKind::SLM, t.slm_path.back()).has_value());
  }
  SUBCASE("unknown content is exhausted") {
    Subtask cur{1, "totally unknown step", ModelKind::LLM};
    CHECK_FALSE(suite.sp_predict(ModelKind::LLM, cur).has_value());
  }
}

TEST_CASE("sp iteration reproduces the backing path") {
  GeneratorConfig cfg;
  cfg.seed = 17;
  cfg.n_requests = 10;
  Workload wl = generate_workload(cfg);
  TraceBackedSuite suite(wl.store);
  for (const RequestProfile& p : wl.store->profiles()) {
    auto path = p.llm_path();
    Subtask cur = path.front();
    for (size_t i = 1; i < path.size(); ++i) {
      auto next = suite.sp_predict(ModelKind::LLM, cur);
      REQUIRE(next.has_value());
      CHECK(next->content == path[i].content);
      cur = *next;
    }
    CHECK_FALSE(suite.sp_predict(ModelKind::LLM, cur).has_value());
  }
}

TEST_CASE("dp matches the documented alignment distances") {
  SubtaskTrace t = fig5_trace();
  TraceBackedSuite suite(store_of({t}));
  CHECK(suite.dp_predict(t.llm_path[0].content, 1) == SLDistance(1));
  CHECK(suite.dp_predict(t.llm_path[1].content, 2) == SLDistance(2));
  CHECK(suite.dp_predict(t.llm_path[2].content, 3) == SLDistance(0));
  CHECK(suite.dp_predict("never seen anywhere", 1).is_infinite());
  CHECK_THROWS_AS(suite.dp_predict(t.llm_path[0].content, 0), std::invalid_argument);
}

TEST_CASE("dp equals a fresh alignment recomputation on generated traces") {
  GeneratorConfig cfg;
  cfg.seed = 23;
  cfg.n_requests = 60;
  Workload wl = generate_workload(cfg);
  TraceBackedSuite suite(wl.store);
  EmbeddingCache cache(builtin_embedder());
  for (const RequestProfile& p : wl.store->profiles()) {
    SLAlignment fresh = align(p.llm_path(), p.slm_path(), 0.7, cache);
    for (int u = 1; u <= p.llm_len(); ++u) {
      CHECK(suite.dp_predict(p.units[u - 1].llm_content, u) == fresh.distances[u - 1]);
    }
  }
}

TEST_CASE("sle rollout lands on the aligned track position") {
  SubtaskTrace t = fig5_trace();
  TraceBackedSuite suite(store_of({t}));
  // At the second llm subtask (distance 2) a 3-step rollout reaches its match.
  auto landed = suite.sle_rollout(t.llm_path[1], 3);
  REQUIRE(landed.has_value());
  CHECK(landed->content == t.slm_path[4].content);
  // Rolling past the end of the track exhausts.
  CHECK_FALSE(suite.sle_rollout(t.llm_path[2], 4).has_value());
}

TEST_CASE("sd splits an llm gap into the intervening slm steps") {
  GeneratorConfig cfg;
  cfg.seed = 5;
  cfg.n_requests = 200;
  Workload wl = generate_workload(cfg);
  TraceBackedSuite suite(wl.store);

  bool tested_two_step = false;
  for (const RequestProfile& p : wl.store->profiles()) {
    for (size_t u = 0; u + 1 < p.units.size() && !tested_two_step; ++u) {
      if (p.units[u + 1].lead_in.size() != 1) continue;
      // Unit u+2 (1-based) spans two SLM steps: lead + match.
      Subtask cur{static_cast<int>(u) + 1, p.units[u].llm_content, ModelKind::LLM};
      Subtask next_llm{static_cast<int>(u) + 2, p.units[u + 1].llm_content, ModelKind::LLM};
      auto subs = suite.sd_decompose(cur, next_llm, 4);
      REQUIRE(subs.size() == 2);
      CHECK(subs[0].content == p.units[u + 1].lead_in[0]);
      CHECK(subs[1].content == p.units[u + 1].slm_content);
      CHECK(subs[0].seq_id == cur.seq_id);  // inherited position
      tested_two_step = true;
    }
  }
  CHECK(tested_two_step);
}

TEST_CASE("sd returns the original subtask when indivisible") {
  SubtaskTrace t = titanic_trace();  // identical paths: every gap is one step
  TraceBackedSuite suite(store_of({t}));
  Subtask cur = t.llm_path[0];
  Subtask next_llm = t.llm_path[1];
  auto subs = suite.sd_decompose(cur, next_llm, 4);
  REQUIRE(subs.size() == 1);
  CHECK(subs[0].content == cur.content);
}

TEST_CASE("sd merges the tail beyond the part cap") {
  // A six-step gap between the two llm subtasks.
  SubtaskTrace t;
  t.request.id = "long-gap";
  t.request.text = "q";
  t.llm_path = path_of({"p1 p2 p3 p4", "q1 q2 q3 q4"}, ModelKind::LLM);
  t.slm_path = path_of({"p1 p2 p3 px", "s1a s1b", "s2a s2b", "s3a s3b", "s4a s4b", "s5a s5b",
                        "q1 q2 q3 qx"},
                       ModelKind::SLM);
  t.slm_final = "fin";
  t.llm_final = "fin";
  TraceBackedSuite suite(store_of({t}));

  auto subs = suite.sd_decompose(t.llm_path[0], t.llm_path[1], 4);
  REQUIRE(subs.size() == 4);
  CHECK(subs[0].content == "s1a s1b");
  CHECK(subs[1].content == "s2a s2b");
  CHECK(subs[2].content == "s3a s3b");
  // Tail merged: the remaining steps joined into one part.
  CHECK(subs[3].content == "s4a s4b s5a s5b q1 q2 q3 qx");
}

TEST_CASE("predictors are deterministic across calls") {
  GeneratorConfig cfg;
  cfg.seed = 8;
  cfg.n_requests = 5;
  Workload wl = generate_workload(cfg);
  TraceBackedSuite suite(wl.store);
  const RequestProfile& p = wl.store->profiles().front();
  Subtask cur{1, p.units[0].llm_content, ModelKind::LLM};
  auto a = suite.sp_predict(ModelKind::SLM, cur);
  auto b = suite.sp_predict(ModelKind::SLM, cur);
  REQUIRE(a.has_value());
  REQUIRE(b.has_value());
  CHECK(a->content == b->content);
}

TEST_CASE("noisy suite flips outcomes deterministically at the configured rate") {
  GeneratorConfig cfg;
  cfg.seed = 13;
  cfg.n_requests = 400;
  Workload wl = generate_workload(cfg);
  auto base = std::make_shared<TraceBackedSuite>(wl.store);
  NoisySuite noisy(base, 0.25, 99);

  int urc_flips = 0;
  for (const UserRequest& r : wl.requests()) {
    auto clean = base->urc_predict(r);
    auto dirty1 = noisy.urc_predict(r);
    auto dirty2 = noisy.urc_predict(r);
    REQUIRE(dirty1 == dirty2);  // deterministic per input
    if (clean != dirty1) ++urc_flips;
  }
  double rate = static_cast<double>(urc_flips) / wl.requests().size();
  CHECK(rate > 0.15);
  CHECK(rate < 0.35);

  // Corrupted predictions break similarity with the true prediction.
  const RequestProfile& p = wl.store->profiles().front();
  Subtask cur{1, p.units[0].llm_content, ModelKind::LLM};
  NoisySuite always(base, 0.5, 1);
  EmbeddingCache cache(builtin_embedder());
  int corrupted = 0, total = 0;
  for (const RequestProfile& pr : wl.store->profiles()) {
    Subtask c{1, pr.units[0].llm_content, ModelKind::LLM};
    auto clean = base->sp_predict(ModelKind::SLM, c);
    auto dirty = always.sp_predict(ModelKind::SLM, c);
    if (!clean || !dirty) continue;
    ++total;
    if (clean->content != dirty->content) {
      ++corrupted;
      CHECK(cache.cosine_between(clean->content, dirty->content) < 0.7);
    }
  }
  CHECK(total > 0);
  CHECK(corrupted > total / 4);
}

TEST_CASE("noise rate is validated") {
  GeneratorConfig cfg;
  cfg.seed = 1;
  cfg.n_requests = 2;
  Workload wl = generate_workload(cfg);
  auto base = std::make_shared<TraceBackedSuite>(wl.store);
  CHECK_THROWS_AS(NoisySuite(base, 0.9, 1), std::invalid_argument);
}
