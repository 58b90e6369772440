#include "hera/trace_store.hpp"

#include <algorithm>
#include <stdexcept>

namespace hera {

int RequestProfile::slm_len() const {
  int n = 0;
  for (const UnitPlan& u : units) n += 1 + static_cast<int>(u.lead_in.size());
  return n;
}

std::vector<Subtask> RequestProfile::llm_path() const {
  std::vector<Subtask> path;
  path.reserve(units.size());
  int seq = 1;
  for (const UnitPlan& u : units) path.push_back(Subtask{seq++, u.llm_content, ModelKind::LLM});
  return path;
}

std::vector<Subtask> RequestProfile::slm_path() const {
  std::vector<Subtask> path;
  int seq = 1;
  for (const UnitPlan& u : units) {
    for (const std::string& e : u.lead_in) path.push_back(Subtask{seq++, e, ModelKind::SLM});
    path.push_back(Subtask{seq++, u.slm_content, ModelKind::SLM});
  }
  return path;
}

const std::string& RequestProfile::final_for_steps(int steps) const {
  if (final_variants.empty()) return llm_final;
  size_t idx = std::min<size_t>(static_cast<size_t>(std::max(steps, 0)), final_variants.size() - 1);
  return final_variants[idx];
}

TraceStore TraceStore::from_profiles(std::vector<RequestProfile> profiles, double sl_threshold) {
  TraceStore store;
  store.profiles_ = std::move(profiles);
  store.sl_threshold_ = sl_threshold;
  store.index();
  return store;
}

TraceStore TraceStore::from_traces(const std::vector<SubtaskTrace>& traces, double sl_threshold) {
  TraceStore store;
  store.sl_threshold_ = sl_threshold;
  store.profiles_.reserve(traces.size());
  for (const SubtaskTrace& t : traces)
    store.profiles_.push_back(profile_from_trace(t, *store.cache_, sl_threshold));
  store.index();
  return store;
}

namespace {

void put_slm_edge(std::unordered_map<std::string, ContentEdges>& edges, const std::string& from,
                  const std::string& to) {
  ContentEdges& e = edges[from];
  if (!e.slm_next && !e.slm_terminal) e.slm_next = to;
}

void put_slm_terminal(std::unordered_map<std::string, ContentEdges>& edges,
                      const std::string& from) {
  ContentEdges& e = edges[from];
  if (!e.slm_next) e.slm_terminal = true;
}

void put_llm_edge(std::unordered_map<std::string, ContentEdges>& edges, const std::string& from,
                  const std::string& to) {
  ContentEdges& e = edges[from];
  if (!e.llm_next && !e.llm_terminal) e.llm_next = to;
}

void put_llm_terminal(std::unordered_map<std::string, ContentEdges>& edges,
                      const std::string& from) {
  ContentEdges& e = edges[from];
  if (!e.llm_next) e.llm_terminal = true;
}

}  // namespace

void TraceStore::index() {
  for (size_t r = 0; r < profiles_.size(); ++r) {
    const RequestProfile& p = profiles_[r];
    if (p.units.empty()) throw std::invalid_argument("profile with no units: " + p.request.id);
    by_id_.emplace(p.request.id, static_cast<int>(r));
    const int L = p.llm_len();

    for (int u = 1; u <= L; ++u) {
      const UnitPlan& unit = p.units[u - 1];
      auto ref = [&](ContentRef::Kind kind) {
        return ContentRef{static_cast<int>(r), u, kind};
      };
      refs_.emplace(unit.llm_content, ref(ContentRef::Kind::LlmUnit));
      refs_.emplace(unit.slm_content, ref(ContentRef::Kind::SlmUnit));
      for (const std::string& e : unit.lead_in) refs_.emplace(e, ref(ContentRef::Kind::LeadIn));

      // Unit-level contents share the same outgoing edges.
      for (const std::string& from : {unit.llm_content, unit.slm_content}) {
        if (u < L) {
          const UnitPlan& next = p.units[u];
          put_llm_edge(edges_, from, next.llm_content);
          put_slm_edge(edges_, from,
                       next.lead_in.empty() ? next.slm_content : next.lead_in.front());
        } else {
          put_llm_terminal(edges_, from);
          put_slm_terminal(edges_, from);
        }
      }
      // Lead-in steps: SLM walks the segment, LLM consolidates the unit.
      for (size_t t = 0; t < unit.lead_in.size(); ++t) {
        const std::string& from = unit.lead_in[t];
        put_slm_edge(edges_, from,
                     t + 1 < unit.lead_in.size() ? unit.lead_in[t + 1] : unit.slm_content);
        put_llm_edge(edges_, from, unit.llm_content);
      }
    }

    alignments_.push_back(align(p.llm_path(), p.slm_path(), sl_threshold_, *cache_));
  }
}

const RequestProfile* TraceStore::find_request(const std::string& request_id) const {
  auto it = by_id_.find(request_id);
  return it == by_id_.end() ? nullptr : &profiles_[it->second];
}

int TraceStore::request_index(const std::string& request_id) const {
  auto it = by_id_.find(request_id);
  return it == by_id_.end() ? -1 : it->second;
}

const ContentEdges* TraceStore::edges_for(const std::string& content) const {
  auto it = edges_.find(content);
  return it == edges_.end() ? nullptr : &it->second;
}

const ContentRef* TraceStore::ref_for(const std::string& content) const {
  auto it = refs_.find(content);
  return it == refs_.end() ? nullptr : &it->second;
}

const SLAlignment& TraceStore::alignment(int request_index) const {
  return alignments_.at(request_index);
}

int TraceStore::match_index(int request_index, int unit) const {
  const SLAlignment& a = alignments_.at(request_index);
  for (const auto& [lk, sj] : a.matches)
    if (lk == unit - 1) return sj;
  return -1;
}

std::vector<SubtaskTrace> TraceStore::to_traces() const {
  std::vector<SubtaskTrace> out;
  out.reserve(profiles_.size());
  for (const RequestProfile& p : profiles_) {
    SubtaskTrace t;
    t.request = p.request;
    t.llm_path = p.llm_path();
    t.slm_path = p.slm_path();
    t.llm_final = p.llm_final;
    t.slm_final = p.slm_final;
    out.push_back(std::move(t));
  }
  return out;
}

namespace {

// Recovers unit structure from a stored branch tree by walking the all-SLM
// executor branch. A produced subtask's LLM child identifies its role: a
// lead-in step of unit u consolidates to c_u, the unit-level step m_u
// advances to c_{u+1} (or terminates at the last unit). Returns false when
// the tree is too sparse to walk.
bool units_from_tree(const SubtaskTrace& trace, std::vector<UnitPlan>& units) {
  const int L = static_cast<int>(trace.llm_path.size());
  units.assign(L, UnitPlan{});
  for (int u = 0; u < L; ++u) units[u].llm_content = trace.llm_path[u].content;
  // The LLM-rooted tree never reaches m_1; the pure SLM path starts there.
  units[0].slm_content = trace.slm_path[0].content;

  std::string prefix;
  int unit = 1;  // last completed unit along the walk (1-based)
  while (unit < L) {
    prefix.push_back('0');
    auto it = trace.mixed_branches.find(prefix);
    if (it == trace.mixed_branches.end() || !it->second.next) return false;
    const std::string& produced = *it->second.next;
    auto sib = trace.mixed_branches.find(prefix + "1");
    if (sib == trace.mixed_branches.end()) return false;

    if (sib->second.next && *sib->second.next == trace.llm_path[unit].content) {
      // consolidates to c_{unit+1}: produced is a lead-in step of unit+1
      units[unit].lead_in.push_back(produced);
    } else if (unit + 1 < L && sib->second.next &&
               *sib->second.next == trace.llm_path[unit + 1].content) {
      // advances to c_{unit+2}: produced is m_{unit+1}
      units[unit].slm_content = produced;
      unit += 1;
    } else if (unit + 1 == L && sib->second.final) {
      // LLM execution of produced would terminate: produced is m_L
      units[unit].slm_content = produced;
      unit += 1;
    } else {
      return false;
    }
  }
  return true;
}


}  // namespace

RequestProfile profile_from_trace(const SubtaskTrace& trace, const EmbeddingCache& cache,
                                  double sl_threshold) {
  validate_trace(trace);
  RequestProfile p;
  p.request = trace.request;
  p.llm_final = trace.llm_final;
  p.slm_final = trace.slm_final;
  p.final_match_sim = cache.cosine_between(trace.slm_final, trace.llm_final);
  p.final_variants = {trace.llm_final};

  std::vector<UnitPlan> units;
  bool tree_ok = !trace.mixed_branches.empty() && units_from_tree(trace, units);
  if (!tree_ok) {
    // Alignment-based reconstruction: matched units anchor the segmentation,
    // unmatched units fall back to the next positional SLM entry.
    const int L = static_cast<int>(trace.llm_path.size());
    const int S = static_cast<int>(trace.slm_path.size());
    SLAlignment a = align(trace.llm_path, trace.slm_path, sl_threshold, cache);
    std::vector<int> match(L, -1);
    for (const auto& [lk, sj] : a.matches) match[lk] = sj;

    units.assign(L, UnitPlan{});
    int cursor = 0;
    for (int u = 0; u < L; ++u) {
      units[u].llm_content = trace.llm_path[u].content;
      if (match[u] >= 0) {
        for (int j = cursor; j < match[u]; ++j)
          units[u].lead_in.push_back(trace.slm_path[j].content);
        units[u].slm_content = trace.slm_path[match[u]].content;
        cursor = match[u] + 1;
      } else {
        units[u].slm_content = trace.slm_path[std::min(cursor, S - 1)].content;
        cursor = std::min(cursor + 1, S);
      }
    }
  }

  for (UnitPlan& u : units) {
    u.match_sim = cache.cosine_between(u.slm_content, u.llm_content);
    u.lead_sims.clear();
    for (const std::string& e : u.lead_in)
      u.lead_sims.push_back(cache.cosine_between(e, u.llm_content));
  }
  p.units = std::move(units);
  return p;
}

}  // namespace hera
