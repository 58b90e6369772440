#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hera/domain.hpp"
#include "hera/generator.hpp"

using namespace hera;

namespace {

SubtaskTrace make_trace(int slm_len, int llm_len) {
  SubtaskTrace t;
  t.request.id = "req-1";
  t.request.text = "what is the answer";
  t.request.ground_truth = "the answer";
  for (int i = 1; i <= slm_len; ++i)
    t.slm_path.push_back(Subtask{i, "slm step " + std::to_string(i), ModelKind::SLM});
  for (int i = 1; i <= llm_len; ++i)
    t.llm_path.push_back(Subtask{i, "llm step " + std::to_string(i), ModelKind::LLM});
  t.slm_final = "slm final";
  t.llm_final = "llm final";
  return t;
}

}  // namespace

TEST_CASE("validate_trace accepts paths within the depth cap") {
  SubtaskTrace t = make_trace(6, 5);
  CHECK_NOTHROW(validate_trace(t, 15));
}

TEST_CASE("validate_trace rejects an empty path") {
  SubtaskTrace t = make_trace(6, 5);
  t.llm_path.clear();
  CHECK_THROWS_WITH_AS(validate_trace(t, 15), doctest::Contains("empty path"), TraceError);
}

TEST_CASE("validate_trace rejects over-depth paths") {
  SubtaskTrace t = make_trace(16, 5);
  CHECK_THROWS_WITH_AS(validate_trace(t, 15), doctest::Contains("exceeds profiling depth"),
                       TraceError);
}

TEST_CASE("validate_trace rejects seq_id gaps") {
  SubtaskTrace t = make_trace(4, 4);
  t.slm_path[2].seq_id = 5;
  CHECK_THROWS_WITH_AS(validate_trace(t, 15), doctest::Contains("bad seq_id"), TraceError);
}

TEST_CASE("validate_trace checks branch keys") {
  SubtaskTrace t = make_trace(4, 4);
  t.mixed_branches["01"] = BranchNode{std::string("next step"), std::nullopt};
  CHECK_NOTHROW(validate_trace(t, 15));

  t.mixed_branches["0x"] = BranchNode{std::string("bad"), std::nullopt};
  CHECK_THROWS_WITH_AS(validate_trace(t, 15), doctest::Contains("bit string"), TraceError);
  t.mixed_branches.erase("0x");

  t.mixed_branches[std::string(16, '0')] = BranchNode{std::string("deep"), std::nullopt};
  CHECK_THROWS_WITH_AS(validate_trace(t, 15), doctest::Contains("exceeds profiling depth"),
                       TraceError);
  t.mixed_branches.erase(std::string(16, '0'));

  t.mixed_branches["10"] = BranchNode{};
  CHECK_THROWS_WITH_AS(validate_trace(t, 15), doctest::Contains("neither next nor final"),
                       TraceError);
}

TEST_CASE("validate_trace rejects missing finals") {
  SubtaskTrace t = make_trace(3, 3);
  t.slm_final.clear();
  CHECK_THROWS_AS(validate_trace(t, 15), TraceError);
}

TEST_CASE("trace JSONL round-trip is identity") {
  SubtaskTrace t = make_trace(5, 4);
  t.mixed_branches["0"] = BranchNode{std::string("branch next"), std::nullopt};
  t.mixed_branches["01"] = BranchNode{std::nullopt, std::string("branch final")};

  SubtaskTrace back = trace_from_json(trace_to_json(t));
  CHECK(back.request.id == t.request.id);
  CHECK(back.request.text == t.request.text);
  CHECK(back.request.ground_truth == t.request.ground_truth);
  REQUIRE(back.slm_path.size() == t.slm_path.size());
  REQUIRE(back.llm_path.size() == t.llm_path.size());
  for (size_t i = 0; i < t.slm_path.size(); ++i) {
    CHECK(back.slm_path[i].content == t.slm_path[i].content);
    CHECK(back.slm_path[i].seq_id == t.slm_path[i].seq_id);
    CHECK(back.slm_path[i].producer == ModelKind::SLM);
  }
  CHECK(back.slm_final == t.slm_final);
  CHECK(back.llm_final == t.llm_final);
  REQUIRE(back.mixed_branches.size() == 2);
  CHECK(back.mixed_branches.at("0").next == t.mixed_branches.at("0").next);
  CHECK(back.mixed_branches.at("01").final == t.mixed_branches.at("01").final);

  // Serialized form is stable.
  CHECK(trace_to_json(back) == trace_to_json(t));
}

TEST_CASE("generated workloads round-trip through JSONL byte-identically") {
  GeneratorConfig cfg;
  cfg.seed = 11;
  cfg.n_requests = 20;
  Workload wl = generate_workload(cfg);
  auto traces = wl.traces(true);
  std::string text = traces_to_jsonl(traces);
  auto back = traces_from_jsonl_text(text);
  REQUIRE(back.size() == traces.size());
  CHECK(traces_to_jsonl(back) == text);
  for (const auto& t : back) CHECK_NOTHROW(validate_trace(t));
}

TEST_CASE("missing ground truth serializes as null") {
  SubtaskTrace t = make_trace(2, 2);
  t.request.ground_truth.reset();
  SubtaskTrace back = trace_from_json(trace_to_json(t));
  CHECK_FALSE(back.request.ground_truth.has_value());
}

TEST_CASE("malformed JSONL reports the line") {
  CHECK_THROWS_WITH_AS(traces_from_jsonl_text("{}\n"), doctest::Contains("line 1"), TraceError);
}

TEST_CASE("assignment helpers") {
  Assignment a;
  a.choices = {ModelKind::SLM, ModelKind::LLM, ModelKind::SLM};
  CHECK(a.bits() == "010");
  CHECK(a.slm_fraction() == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("similarity score bounds") {
  CHECK_THROWS_AS(SimilarityScore(1.5), std::invalid_argument);
  CHECK_THROWS_AS(SimilarityScore(-0.1), std::invalid_argument);
  CHECK(SimilarityScore(0.7).value == doctest::Approx(0.7));
}
