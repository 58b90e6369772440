#include "hera/router.hpp"

#include <cstdio>

#include <json.hpp>

namespace hera {

void RouterConfig::validate() const {
  if (urc_threshold < 0.0 || urc_threshold >= 2.0)
    throw std::invalid_argument("urc_threshold must be in [0,2)");
  schedule.validate();
  if (cd_horizon < 1) throw std::invalid_argument("cd_horizon must be >= 1");
  if (sd_max < 1) throw std::invalid_argument("sd_max must be >= 1");
  if (depth_cap < 1) throw std::invalid_argument("depth_cap must be >= 1");
}

Assignment RoutedExecution::assignment() const {
  Assignment a;
  a.choices.reserve(executed.size());
  for (const ExecutedUnit& u : executed) a.choices.push_back(u.choice);
  return a;
}

double RoutedExecution::slm_usage() const {
  return executed.empty() ? 0.0 : assignment().slm_fraction();
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

}  // namespace

StageOutcome sse_decide(const RouterConfig& config, const PredictorSuite& suite,
                        const Subtask& current) {
  StageOutcome out;
  out.kappa = threshold_at(config.schedule, current.seq_id);
  auto slm_next = suite.sp_predict(ModelKind::SLM, current);
  auto llm_next = suite.sp_predict(ModelKind::LLM, current);
  if (!slm_next || !llm_next) {
    out.detail = "prediction exhausted";
    return out;
  }
  out.score = shared_cache().cosine_between(slm_next->content, llm_next->content);
  out.pass = *out.score >= out.kappa;
  out.detail = "next-subtask similarity";
  return out;
}

StageOutcome sle_decide(const RouterConfig& config, const PredictorSuite& suite,
                        const Subtask& current) {
  StageOutcome out;
  out.kappa = threshold_at(config.schedule, current.seq_id);
  if (current.producer == ModelKind::SLM) {
    // The distance predictor is trained on LLM-track subtasks; an
    // SLM-produced subtask has no current LLM counterpart to match.
    out.detail = "not an LLM-track subtask";
    return out;
  }
  SLDistance d = suite.dp_predict(current.content, current.seq_id);
  if (d.is_infinite()) {
    out.detail = "distance infinite";
    return out;
  }
  if (d.value == 0) {
    out = sse_decide(config, suite, current);
    out.detail = "d=0, " + out.detail;
    return out;
  }
  auto landed = suite.sle_rollout(current, d.value + 1);
  if (!landed) {
    out.detail = "track exhausted before d+1 steps";
    return out;
  }
  out.score = shared_cache().cosine_between(landed->content, current.content);
  out.pass = *out.score >= out.kappa;
  out.span = d.value + 1;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "d=%d, %d-step track landing", d.value, d.value + 1);
  out.detail = buf;
  return out;
}

StageOutcome cd_decide(const RouterConfig& config, const PredictorSuite& suite,
                       const Subtask& current) {
  StageOutcome out;
  out.kappa = threshold_at(config.schedule, current.seq_id);
  std::optional<Subtask> slm = current;
  std::optional<Subtask> llm = current;
  int best = 0;
  double best_score = 0.0;
  double best_kappa = out.kappa;
  for (int k = 1; k <= config.cd_horizon; ++k) {
    slm = suite.sp_predict(ModelKind::SLM, *slm);
    llm = suite.sp_predict(ModelKind::LLM, *llm);
    if (!slm || !llm) break;  // search truncated at the shorter rollout
    double kappa_k = threshold_at(config.schedule, current.seq_id + k);
    double score = shared_cache().cosine_between(slm->content, llm->content);
    if (score >= kappa_k) {
      best = k;  // keep the latest convergence point
      best_score = score;
      best_kappa = kappa_k;
    }
  }
  if (best == 0) {
    out.detail = "no convergence within horizon";
    return out;
  }
  out.pass = true;
  out.span = best + 1;  // commit through the convergence point inclusive
  out.kappa = best_kappa;
  out.score = best_score;
  char buf[48];
  std::snprintf(buf, sizeof(buf), "convergence at offset %d", best);
  out.detail = buf;
  return out;
}

SdOutcome sd_decide(const RouterConfig& config, const PredictorSuite& suite,
                    const Subtask& current) {
  SdOutcome out;
  out.kappa = threshold_at(config.schedule, current.seq_id);
  auto next_llm = suite.sp_predict(ModelKind::LLM, current);
  if (!next_llm) {
    out.detail = "no next-subtask prediction";
    return out;
  }
  std::vector<Subtask> subs = suite.sd_decompose(current, *next_llm, config.sd_max);
  if (subs.size() == 1 && subs.front().content == current.content) {
    out.detail = "indivisible";
    return out;
  }
  for (size_t j = 0; j < subs.size(); ++j) {
    Subtask sub = subs[j];
    sub.seq_id = current.seq_id;  // sub-subtasks inherit the parent position
    StageOutcome sse = sse_decide(config, suite, sub);
    if (!sse.pass) {
      char buf[48];
      std::snprintf(buf, sizeof(buf), "sub-subtask %zu/%zu unsuitable", j + 1, subs.size());
      out.detail = buf;
      return out;
    }
  }
  out.pass = true;
  out.subtasks = std::move(subs);
  char buf[48];
  std::snprintf(buf, sizeof(buf), "all %zu sub-subtasks suitable", out.subtasks.size());
  out.detail = buf;
  return out;
}

namespace {

// Executes the current subtask, recording the decision and the unit.
void exec_unit(WorldSession& session, RoutedExecution& rx, ModelKind choice, Stage stage,
               std::string detail, std::optional<double> kappa, std::optional<double> score) {
  Subtask cur = session.current();
  session.execute(choice);
  RoutingDecision d;
  d.subtask_seq_id = cur.seq_id;
  d.choice = choice;
  d.stage = stage;
  d.detail = std::move(detail);
  d.kappa = kappa;
  d.score = score;
  rx.decisions.push_back(std::move(d));
  rx.executed.push_back(ExecutedUnit{
      std::move(cur), choice,
      session.finished() ? session.final_output() : session.current().content});
}

}  // namespace

RoutedExecution route_request(const RouterConfig& config, const PredictorSuite& suite,
                              const ExecutionWorld& world, const UserRequest& request) {
  config.validate();
  RoutedExecution rx;
  rx.request_id = request.id;

  // Request-level gate.
  if (config.enable_urc) {
    std::optional<double> score;
    try {
      score = suite.urc_predict(request);
    } catch (const std::exception&) {
      score = std::nullopt;  // transport failure: skip the gate, stay conservative
    }
    if (score) {
      bool pass = *score >= config.urc_threshold;
      RoutingDecision gate;
      gate.subtask_seq_id = 0;
      gate.choice = pass ? ModelKind::SLM : ModelKind::LLM;
      gate.stage = Stage::URC;
      gate.detail = pass ? "request-level gate passed" : "request-level gate declined";
      gate.score = score;
      rx.decisions.push_back(std::move(gate));
      if (pass) {
        try {
          auto session = world.open(request.id, ModelKind::SLM);
          while (!session->finished() &&
                 static_cast<int>(rx.executed.size()) < config.depth_cap) {
            Subtask cur = session->current();
            session->execute(ModelKind::SLM);
            rx.executed.push_back(ExecutedUnit{
                std::move(cur), ModelKind::SLM,
                session->finished() ? session->final_output() : session->current().content});
          }
          rx.finished = session->finished();
          if (rx.finished) rx.final_output = session->final_output();
        } catch (const std::exception&) {
          rx.finished = false;
        }
        return rx;
      }
    }
  }

  // Subtask-level: the first subtask is produced and executed by the LLM,
  // every subsequent one passes through the cascade.
  std::unique_ptr<WorldSession> session;
  try {
    session = world.open(request.id, ModelKind::LLM);
  } catch (const std::exception&) {
    rx.finished = false;
    return rx;
  }

  auto room = [&] { return static_cast<int>(rx.executed.size()) < config.depth_cap; };

  try {
    if (!session->finished() && room())
      exec_unit(*session, rx, ModelKind::LLM, Stage::FALLBACK_LLM,
                "initial subtask after gate", std::nullopt, std::nullopt);

    while (!session->finished() && room()) {
      Subtask cur = session->current();

      StageOutcome sse;
      if (config.enable_sse) {
        try {
          sse = sse_decide(config, suite, cur);
        } catch (const std::exception&) {
          sse = {};
        }
      }
      if (sse.pass) {
        exec_unit(*session, rx, ModelKind::SLM, Stage::SSE, sse.detail, sse.kappa, sse.score);
        continue;
      }

      StageOutcome sle;
      if (config.enable_sle) {
        try {
          sle = sle_decide(config, suite, cur);
        } catch (const std::exception&) {
          sle = {};
        }
      }
      if (sle.pass) {
        for (int i = 0; i < sle.span && !session->finished() && room(); ++i) {
          std::string detail =
              i == 0 ? sle.detail : "committed by lookahead span (" + std::to_string(i) + ")";
          exec_unit(*session, rx, ModelKind::SLM, Stage::SLE, std::move(detail), sle.kappa,
                    sle.score);
        }
        continue;
      }

      StageOutcome cd;
      if (config.enable_cd) {
        try {
          cd = cd_decide(config, suite, cur);
        } catch (const std::exception&) {
          cd = {};
        }
      }
      if (cd.pass) {
        for (int i = 0; i < cd.span && !session->finished() && room(); ++i) {
          std::string detail =
              i == 0 ? cd.detail : "committed to convergence (" + std::to_string(i) + ")";
          exec_unit(*session, rx, ModelKind::SLM, Stage::CD, std::move(detail), cd.kappa,
                    cd.score);
        }
        continue;
      }

      SdOutcome sd;
      if (config.enable_sd) {
        try {
          sd = sd_decide(config, suite, cur);
        } catch (const std::exception&) {
          sd = {};
        }
      }
      if (sd.pass) {
        int span = static_cast<int>(sd.subtasks.size());
        for (int i = 0; i < span && !session->finished() && room(); ++i) {
          std::string detail = i == 0 ? sd.detail
                                      : "decomposed group member (" + std::to_string(i) + ")";
          exec_unit(*session, rx, ModelKind::SLM, Stage::SD, std::move(detail), sd.kappa,
                    std::nullopt);
        }
        continue;
      }

      exec_unit(*session, rx, ModelKind::LLM, Stage::FALLBACK_LLM, "cascade exhausted",
                std::nullopt, std::nullopt);
    }
  } catch (const std::exception&) {
    rx.finished = false;
    return rx;
  }

  rx.finished = session->finished();
  if (rx.finished) rx.final_output = session->final_output();
  return rx;
}

std::string routing_log_jsonl(const RoutedExecution& execution) {
  std::string out;
  for (const RoutingDecision& d : execution.decisions) {
    nlohmann::json j;
    j["seq_id"] = d.subtask_seq_id;
    j["choice"] = model_name(d.choice);
    j["stage"] = stage_name(d.stage);
    j["detail"] = d.detail;
    if (d.kappa)
      j["kappa"] = *d.kappa;
    else
      j["kappa"] = nullptr;
    if (d.score)
      j["score"] = *d.score;
    else
      j["score"] = nullptr;
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace hera
