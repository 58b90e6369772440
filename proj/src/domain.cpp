#include "hera/domain.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace hera {

using nlohmann::json;

SimilarityScore::SimilarityScore(double v) : value(v) {
  if (v < 0.0 || v > 1.0) throw std::invalid_argument("similarity out of [0,1]");
}

double Assignment::slm_fraction() const {
  if (choices.empty()) return 0.0;
  int slm = 0;
  for (ModelKind m : choices)
    if (m == ModelKind::SLM) ++slm;
  return static_cast<double>(slm) / static_cast<double>(choices.size());
}

std::string Assignment::bits() const {
  std::string out;
  out.reserve(choices.size());
  for (ModelKind m : choices) out.push_back(model_bit(m));
  return out;
}

const char* stage_name(Stage s) {
  switch (s) {
    case Stage::URC: return "URC";
    case Stage::SSE: return "SSE";
    case Stage::SLE: return "SLE";
    case Stage::CD: return "CD";
    case Stage::SD: return "SD";
    case Stage::FALLBACK_LLM: return "FALLBACK_LLM";
  }
  return "?";
}

namespace {

void check_path(const std::vector<Subtask>& path, ModelKind producer, const char* where,
                int depth_cap) {
  if (path.empty()) throw TraceError(std::string("empty path: ") + where);
  if (static_cast<int>(path.size()) > depth_cap) {
    std::ostringstream os;
    os << where << " exceeds profiling depth: " << path.size() << " > cap " << depth_cap;
    throw TraceError(os.str());
  }
  for (size_t i = 0; i < path.size(); ++i) {
    const Subtask& st = path[i];
    if (st.seq_id != static_cast<int>(i) + 1) {
      std::ostringstream os;
      os << where << "[" << i << "]: bad seq_id " << st.seq_id << ", expected " << i + 1;
      throw TraceError(os.str());
    }
    if (st.content.empty()) {
      std::ostringstream os;
      os << where << "[" << i << "]: empty content";
      throw TraceError(os.str());
    }
    if (st.producer != producer) {
      std::ostringstream os;
      os << where << "[" << i << "]: wrong producer";
      throw TraceError(os.str());
    }
  }
}

}  // namespace

const SubtaskTrace& validate_trace(const SubtaskTrace& trace, int depth_cap) {
  if (trace.request.id.empty()) throw TraceError("empty request id");
  if (trace.request.text.empty()) throw TraceError("empty request text");
  check_path(trace.slm_path, ModelKind::SLM, "slm_path", depth_cap);
  check_path(trace.llm_path, ModelKind::LLM, "llm_path", depth_cap);
  if (trace.slm_final.empty()) throw TraceError("empty slm_final");
  if (trace.llm_final.empty()) throw TraceError("empty llm_final");
  for (const auto& [prefix, node] : trace.mixed_branches) {
    if (prefix.empty()) throw TraceError("mixed_branches: empty prefix key");
    if (static_cast<int>(prefix.size()) > depth_cap) {
      throw TraceError("mixed_branches: prefix '" + prefix + "' exceeds profiling depth");
    }
    for (char c : prefix) {
      if (c != '0' && c != '1')
        throw TraceError("mixed_branches: prefix '" + prefix + "' is not a bit string");
    }
    if (!node.next && !node.final)
      throw TraceError("mixed_branches: prefix '" + prefix + "' carries neither next nor final");
    if (node.next && node.next->empty())
      throw TraceError("mixed_branches: prefix '" + prefix + "' has empty next");
    if (node.final && node.final->empty())
      throw TraceError("mixed_branches: prefix '" + prefix + "' has empty final");
  }
  return trace;
}

namespace {

json path_to_json(const std::vector<Subtask>& path) {
  json arr = json::array();
  for (const Subtask& st : path) arr.push_back(st.content);
  return arr;
}

std::vector<Subtask> path_from_json(const json& arr, ModelKind producer, const char* where) {
  if (!arr.is_array()) throw TraceError(std::string(where) + ": expected array");
  std::vector<Subtask> out;
  out.reserve(arr.size());
  int seq = 1;
  for (const auto& item : arr) {
    if (!item.is_string()) throw TraceError(std::string(where) + ": expected string entries");
    out.push_back(Subtask{seq++, item.get<std::string>(), producer});
  }
  return out;
}

}  // namespace

std::string trace_to_json(const SubtaskTrace& trace) {
  json j;
  j["request_id"] = trace.request.id;
  j["request_text"] = trace.request.text;
  if (trace.request.ground_truth)
    j["ground_truth"] = *trace.request.ground_truth;
  else
    j["ground_truth"] = nullptr;
  j["slm_path"] = path_to_json(trace.slm_path);
  j["llm_path"] = path_to_json(trace.llm_path);
  j["slm_final"] = trace.slm_final;
  j["llm_final"] = trace.llm_final;
  json branches = json::object();
  for (const auto& [prefix, node] : trace.mixed_branches) {
    json b = json::object();
    if (node.next) b["next"] = *node.next;
    if (node.final) b["final"] = *node.final;
    branches[prefix] = std::move(b);
  }
  j["mixed_branches"] = std::move(branches);
  return j.dump();
}

SubtaskTrace trace_from_json(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw TraceError(std::string("malformed trace JSON: ") + e.what());
  }
  SubtaskTrace t;
  try {
    t.request.id = j.at("request_id").get<std::string>();
    t.request.text = j.at("request_text").get<std::string>();
    if (j.contains("ground_truth") && !j["ground_truth"].is_null())
      t.request.ground_truth = j["ground_truth"].get<std::string>();
    t.slm_path = path_from_json(j.at("slm_path"), ModelKind::SLM, "slm_path");
    t.llm_path = path_from_json(j.at("llm_path"), ModelKind::LLM, "llm_path");
    t.slm_final = j.at("slm_final").get<std::string>();
    t.llm_final = j.at("llm_final").get<std::string>();
    if (j.contains("mixed_branches") && !j["mixed_branches"].is_null()) {
      for (const auto& [prefix, b] : j["mixed_branches"].items()) {
        BranchNode node;
        if (b.contains("next") && !b["next"].is_null()) node.next = b["next"].get<std::string>();
        if (b.contains("final") && !b["final"].is_null())
          node.final = b["final"].get<std::string>();
        t.mixed_branches.emplace(prefix, std::move(node));
      }
    }
  } catch (const json::exception& e) {
    throw TraceError(std::string("malformed trace record: ") + e.what());
  }
  return t;
}

std::string traces_to_jsonl(const std::vector<SubtaskTrace>& traces) {
  std::string out;
  for (const SubtaskTrace& t : traces) {
    out += trace_to_json(t);
    out += '\n';
  }
  return out;
}

std::vector<SubtaskTrace> traces_from_jsonl_text(const std::string& text) {
  std::vector<SubtaskTrace> out;
  std::istringstream in(text);
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(trace_from_json(line));
    } catch (const TraceError& e) {
      throw TraceError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::vector<SubtaskTrace> load_traces(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open trace file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return traces_from_jsonl_text(buf.str());
}

void save_traces(const std::vector<SubtaskTrace>& traces, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write trace file: " + path);
  out << traces_to_jsonl(traces);
}

}  // namespace hera
