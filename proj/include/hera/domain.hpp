#pragma once

// Core value types shared across the router, predictors, metrics and the
// evaluation harness. Everything here is immutable after construction and
// safe to share between concurrent workers.

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hera {

// Which model executes a unit of work. The wire encoding (trace prefixes,
// routing logs) uses '0' for SLM and '1' for LLM.
enum class ModelKind : uint8_t { SLM = 0, LLM = 1 };

inline char model_bit(ModelKind m) { return m == ModelKind::SLM ? '0' : '1'; }
inline const char* model_name(ModelKind m) { return m == ModelKind::SLM ? "SLM" : "LLM"; }

struct UserRequest {
  std::string id;            // non-empty, unique within a workload
  std::string text;          // non-empty
  std::optional<std::string> ground_truth;
};

struct Subtask {
  int seq_id = 1;            // 1-based position in its sequence
  std::string content;       // non-empty
  ModelKind producer = ModelKind::LLM;
};

// A similarity value clamped to [0,1].
struct SimilarityScore {
  double value = 0.0;
  SimilarityScore() = default;
  explicit SimilarityScore(double v);
};

// One branch record of the profiling tree: the subtask produced after
// executing a given executor-choice prefix, and/or the final output when the
// branch terminates there. Keys of SubtaskTrace::mixed_branches.
struct BranchNode {
  std::optional<std::string> next;   // produced subtask content
  std::optional<std::string> final;  // final output when terminal
};

// Paired profiling record for one request: the two pure execution paths plus
// an optional sparse map of mixed executor branches. Branch prefixes are bit
// strings over ModelKind rooted at ST_1 = llm_path[0]; bit k is the executor
// of ST_{k+1}.
struct SubtaskTrace {
  UserRequest request;
  std::vector<Subtask> slm_path;
  std::vector<Subtask> llm_path;
  std::string slm_final;
  std::string llm_final;
  std::map<std::string, BranchNode> mixed_branches;
};

// Per-unit executor choices; one entry per executed subtask.
struct Assignment {
  std::vector<ModelKind> choices;

  double slm_fraction() const;
  std::string bits() const;
};

enum class Stage : uint8_t { URC, SSE, SLE, CD, SD, FALLBACK_LLM };

const char* stage_name(Stage s);

// One routing decision. stage==URC is only legal as a whole-request record
// (subtask_seq_id == 0); FALLBACK_LLM always carries choice==LLM.
struct RoutingDecision {
  int subtask_seq_id = 0;
  ModelKind choice = ModelKind::LLM;
  Stage stage = Stage::FALLBACK_LLM;
  std::string detail;
  std::optional<double> kappa;   // threshold in force when the stage fired
  std::optional<double> score;   // similarity that drove the decision
};

struct TraceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr int kDefaultDepthCap = 15;

// Returns the trace unchanged iff every type invariant holds; throws
// TraceError naming the first violation and its location otherwise.
// Checked: non-empty request id/text, both paths non-empty with contiguous
// 1-based seq_ids and matching producers, non-empty contents and finals,
// path lengths and branch prefixes within the profiling depth cap.
const SubtaskTrace& validate_trace(const SubtaskTrace& trace, int depth_cap = kDefaultDepthCap);

// JSONL interchange: one trace object per line, fields `request_id`,
// `request_text`, `ground_truth`, `slm_path`, `llm_path`, `slm_final`,
// `llm_final`, `mixed_branches`. Paths are arrays of content strings
// (seq_ids and producers are implied by position and side).
std::string trace_to_json(const SubtaskTrace& trace);
SubtaskTrace trace_from_json(const std::string& line);

std::string traces_to_jsonl(const std::vector<SubtaskTrace>& traces);
std::vector<SubtaskTrace> traces_from_jsonl_text(const std::string& text);
std::vector<SubtaskTrace> load_traces(const std::string& path);
void save_traces(const std::vector<SubtaskTrace>& traces, const std::string& path);

}  // namespace hera
