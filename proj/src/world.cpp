#include "hera/world.hpp"

#include <stdexcept>

namespace hera {

double world_sync_threshold(int unit) {
  static const ThresholdSchedule schedule{};
  return threshold_at(schedule, std::max(unit, 1));
}

namespace {

// Position in a profile's execution tree.
struct ChainPos {
  int unit = 1;      // 1-based unit the current content belongs to
  int seg = 0;       // 0: unit-level content; t>=1: lead_in[t-1] of `unit`
  bool slm_side = false;
  int steps = 0;     // accumulated degradation
  bool pure_slm = true;  // no LLM execution yet (pure SLM replay)
};

const std::string& pos_content(const RequestProfile& p, const ChainPos& s) {
  const UnitPlan& u = p.units[s.unit - 1];
  if (s.seg > 0) return u.lead_in[s.seg - 1];
  return s.slm_side ? u.slm_content : u.llm_content;
}

double pos_sync(const RequestProfile& p, const ChainPos& s) {
  const UnitPlan& u = p.units[s.unit - 1];
  if (s.seg > 0) return u.lead_sims[s.seg - 1];
  return s.slm_side ? u.match_sim : 1.0;
}

// One execution step; returns true when the run finished (final_steps set).
bool chain_step(const RequestProfile& p, ChainPos& s, ModelKind choice, int& final_steps,
                bool slm_rooted) {
  const int L = p.llm_len();
  bool desynced_in = pos_sync(p, s) < world_sync_threshold(s.unit);

  if (choice == ModelKind::LLM) {
    if (desynced_in) s.steps += kRecoverySteps;
    s.pure_slm = false;
    if (s.seg > 0) {
      s.seg = 0;
      s.slm_side = false;  // consolidate the in-progress unit at LLM quality
    } else if (s.unit == L) {
      final_steps = s.steps;
      return true;
    } else {
      s.unit += 1;
      s.seg = 0;
      s.slm_side = false;
    }
    return false;
  }

  // SLM execution
  if (s.seg > 0) {
    const UnitPlan& u = p.units[s.unit - 1];
    if (s.seg < static_cast<int>(u.lead_in.size())) {
      s.seg += 1;
    } else {
      s.seg = 0;
      s.slm_side = true;
    }
    return false;
  }
  if (s.unit == L) {
    bool desynced_final = p.final_match_sim < world_sync_threshold(s.unit + 1) || desynced_in;
    if (slm_rooted && s.pure_slm) {
      final_steps = -1;  // pure SLM replay: caller uses slm_final
    } else {
      if (desynced_final) s.steps += kTerminalDesyncSteps;
      final_steps = s.steps;
    }
    return true;
  }
  const UnitPlan& next = p.units[s.unit];
  s.unit += 1;
  if (next.lead_in.empty()) {
    s.seg = 0;
    s.slm_side = true;
  } else {
    s.seg = 1;
  }
  return false;
}

class ProfileSession final : public WorldSession {
 public:
  ProfileSession(const RequestProfile& profile, ModelKind root) : profile_(&profile) {
    if (root == ModelKind::LLM) {
      pos_ = ChainPos{1, 0, false, 0, false};
      slm_rooted_ = false;
    } else {
      const UnitPlan& first = profile.units.front();
      pos_ = ChainPos{1, first.lead_in.empty() ? 0 : 1, first.lead_in.empty(), 0, true};
      slm_rooted_ = true;
    }
    current_ = Subtask{1, pos_content(*profile_, pos_), root};
  }

  const Subtask& current() const override { return current_; }
  bool finished() const override { return finished_; }
  const std::string& final_output() const override { return final_; }
  int executed_count() const override { return executed_; }

  void execute(ModelKind choice) override {
    if (finished_) throw std::logic_error("execute on finished session");
    int final_steps = 0;
    if (chain_step(*profile_, pos_, choice, final_steps, slm_rooted_)) {
      finished_ = true;
      final_ = final_steps < 0 ? profile_->slm_final : profile_->final_for_steps(final_steps);
    } else {
      current_ = Subtask{current_.seq_id + 1, pos_content(*profile_, pos_), choice};
    }
    ++executed_;
  }

  std::unique_ptr<WorldSession> clone() const override {
    return std::make_unique<ProfileSession>(*this);
  }

 private:
  const RequestProfile* profile_;
  ChainPos pos_;
  bool slm_rooted_ = false;
  Subtask current_;
  bool finished_ = false;
  std::string final_;
  int executed_ = 0;
};

}  // namespace

std::unique_ptr<WorldSession> ProfileWorld::open(const std::string& request_id,
                                                 ModelKind root) const {
  const RequestProfile* p = store_->find_request(request_id);
  if (!p) throw std::out_of_range("unknown request: " + request_id);
  return std::make_unique<ProfileSession>(*p, root);
}

namespace {

class TraceSession final : public WorldSession {
 public:
  TraceSession(const SubtaskTrace& trace, ModelKind root) : trace_(&trace), root_(root) {
    const auto& path = root == ModelKind::SLM ? trace.slm_path : trace.llm_path;
    current_ = Subtask{1, path.front().content, root};
  }

  const Subtask& current() const override { return current_; }
  bool finished() const override { return finished_; }
  const std::string& final_output() const override { return final_; }
  int executed_count() const override { return executed_; }

  void execute(ModelKind choice) override {
    if (finished_) throw std::logic_error("execute on finished session");
    prefix_.push_back(model_bit(choice));
    ++executed_;

    if (root_ == ModelKind::SLM) {
      step_positional(choice);
      return;
    }
    if (prefix_.find('0') == std::string::npos) {
      // pure LLM prefix: implied by llm_path
      size_t k = prefix_.size();
      if (k < trace_->llm_path.size()) {
        set_current(trace_->llm_path[k].content, choice);
      } else {
        finish(trace_->llm_final);
      }
      return;
    }
    auto it = trace_->mixed_branches.find(prefix_);
    if (it != trace_->mixed_branches.end()) {
      if (it->second.next) {
        set_current(*it->second.next, choice);
      } else {
        finish(it->second.final.value_or(choice == ModelKind::SLM ? trace_->slm_final
                                                                  : trace_->llm_final));
      }
      return;
    }
    step_positional(choice);
  }

  std::unique_ptr<WorldSession> clone() const override {
    return std::make_unique<TraceSession>(*this);
  }

 private:
  void step_positional(ModelKind choice) {
    const auto& path = choice == ModelKind::SLM ? trace_->slm_path : trace_->llm_path;
    size_t k = prefix_.size();
    if (k < path.size()) {
      set_current(path[k].content, choice);
    } else {
      finish(choice == ModelKind::SLM ? trace_->slm_final : trace_->llm_final);
    }
  }

  void set_current(const std::string& content, ModelKind producer) {
    current_ = Subtask{current_.seq_id + 1, content, producer};
  }

  void finish(const std::string& final) {
    finished_ = true;
    final_ = final;
  }

  const SubtaskTrace* trace_;
  ModelKind root_;
  std::string prefix_;
  Subtask current_;
  bool finished_ = false;
  std::string final_;
  int executed_ = 0;
};

}  // namespace

TraceWorld::TraceWorld(std::vector<SubtaskTrace> traces) : traces_(std::move(traces)) {
  for (size_t i = 0; i < traces_.size(); ++i) by_id_.emplace(traces_[i].request.id, i);
}

std::unique_ptr<WorldSession> TraceWorld::open(const std::string& request_id,
                                               ModelKind root) const {
  auto it = by_id_.find(request_id);
  if (it == by_id_.end()) throw std::out_of_range("unknown request: " + request_id);
  return std::make_unique<TraceSession>(traces_[it->second], root);
}

namespace {

void enumerate_branches(const RequestProfile& profile, ChainPos pos, std::string& prefix,
                        std::map<std::string, BranchNode>& out, int depth_cap) {
  if (static_cast<int>(prefix.size()) >= depth_cap)
    throw std::logic_error("branch exceeds depth cap during materialization");
  for (ModelKind choice : {ModelKind::SLM, ModelKind::LLM}) {
    ChainPos next = pos;
    int final_steps = 0;
    bool done = chain_step(profile, next, choice, final_steps, /*slm_rooted=*/false);
    prefix.push_back(model_bit(choice));
    bool pure_llm = prefix.find('0') == std::string::npos;
    if (done) {
      if (!pure_llm) {
        BranchNode node;
        node.final = profile.final_for_steps(final_steps);
        out[prefix] = std::move(node);
      }
    } else {
      if (!pure_llm) {
        BranchNode node;
        node.next = pos_content(profile, next);
        out[prefix] = std::move(node);
      }
      enumerate_branches(profile, next, prefix, out, depth_cap);
    }
    prefix.pop_back();
  }
}

}  // namespace

std::map<std::string, BranchNode> materialize_branches(const RequestProfile& profile,
                                                       int depth_cap) {
  std::map<std::string, BranchNode> out;
  ChainPos root{1, 0, false, 0, false};
  std::string prefix;
  enumerate_branches(profile, root, prefix, out, depth_cap);
  return out;
}

}  // namespace hera
