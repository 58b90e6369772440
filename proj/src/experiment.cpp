#include "hera/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "hera/remote.hpp"
#include "hera/slmetrics.hpp"

namespace hera {

using nlohmann::json;

ExperimentSpec ExperimentSpec::from_config(const KvConfig& cfg) {
  ExperimentSpec spec;

  spec.source = cfg.get_string("workload", "source", "generate");
  if (spec.source != "generate" && spec.source != "file")
    throw SpecError(0, "workload.source must be generate or file");
  spec.path = cfg.get_string("workload", "path", "");
  if (spec.source == "file" && spec.path.empty())
    throw SpecError(0, "workload.path required when source = file");

  GeneratorConfig& g = spec.generator;
  g.seed = static_cast<uint64_t>(cfg.get_int("workload", "seed", 1));
  g.n_requests = cfg.get_int("workload", "n_requests", 200);
  g.llm_len_mean = cfg.get_double("workload", "llm_len_mean", g.llm_len_mean);
  g.slm_len_mean = cfg.get_double("workload", "slm_len_mean", g.slm_len_mean);
  g.sim_early = cfg.get_double("workload", "sim_early", g.sim_early);
  g.sim_mid = cfg.get_double("workload", "sim_mid", g.sim_mid);
  g.sim_late = cfg.get_double("workload", "sim_late", g.sim_late);
  g.matched_final_fraction =
      cfg.get_double("workload", "matched_final_fraction", g.matched_final_fraction);
  g.llm_correct_rate = cfg.get_double("workload", "llm_correct_rate", g.llm_correct_rate);
  g.vocab_size = cfg.get_int("workload", "vocab_size", g.vocab_size);
  g.token_len = cfg.get_int("workload", "token_len", g.token_len);
  g.depth_cap = cfg.get_int("workload", "depth_cap", g.depth_cap);

  std::string judge_kind = cfg.get_string("judge", "kind", "similarity");
  if (judge_kind == "similarity") {
    spec.eval.judge.kind = Judge::Kind::Similarity;
  } else if (judge_kind == "exact") {
    spec.eval.judge.kind = Judge::Kind::Exact;
  } else {
    throw SpecError(0, "judge.kind must be similarity or exact");
  }
  spec.eval.judge.threshold = cfg.get_double("judge", "threshold", 0.7);

  spec.run_all_slm = cfg.get_bool("policies", "all_slm", true);
  spec.run_all_llm = cfg.get_bool("policies", "all_llm", true);
  spec.run_hera = cfg.get_bool("policies", "hera", true);
  spec.random_p = cfg.get_doubles("policies", "random", {0.5});
  spec.classifier_thresholds = cfg.get_doubles("policies", "classifier", {0.7});

  RouterConfig& rc = spec.hera;
  rc.urc_threshold = cfg.get_double("hera", "urc_threshold", rc.urc_threshold);
  rc.schedule.base = cfg.get_double("hera", "threshold_base", rc.schedule.base);
  rc.schedule.step = cfg.get_double("hera", "threshold_step", rc.schedule.step);
  rc.schedule.cap_id = cfg.get_int("hera", "threshold_cap_id", rc.schedule.cap_id);
  rc.schedule.flat_default = cfg.get_double("hera", "threshold_flat", rc.schedule.flat_default);
  rc.cd_horizon = cfg.get_int("hera", "cd_horizon", rc.cd_horizon);
  rc.sd_max = cfg.get_int("hera", "sd_max", rc.sd_max);
  rc.depth_cap = cfg.get_int("hera", "depth_cap", rc.depth_cap);
  rc.enable_urc = cfg.get_bool("hera", "enable_urc", true);
  rc.enable_sse = cfg.get_bool("hera", "enable_sse", true);
  rc.enable_sle = cfg.get_bool("hera", "enable_sle", true);
  rc.enable_cd = cfg.get_bool("hera", "enable_cd", true);
  rc.enable_sd = cfg.get_bool("hera", "enable_sd", true);

  spec.oracle_enabled = cfg.get_bool("oracle", "enabled", true);
  spec.oracle_floor = cfg.get_double("oracle", "floor", 0.9);
  std::string mode = cfg.get_string("oracle", "mode", "per_request");
  if (mode == "per_request") {
    spec.oracle_workload_level = false;
  } else if (mode == "workload") {
    spec.oracle_workload_level = true;
  } else {
    throw SpecError(0, "oracle.mode must be per_request or workload");
  }

  spec.sweep_hera = cfg.get_doubles("sweep", "hera_thresholds", spec.sweep_hera);
  spec.sweep_classifier = cfg.get_doubles("sweep", "classifier_thresholds", spec.sweep_classifier);
  spec.sweep_random = cfg.get_doubles("sweep", "random_p", spec.sweep_random);
  if (cfg.has_section("sweep") && cfg.get_bool("sweep", "enabled", true) == false) {
    spec.sweep_hera.clear();
    spec.sweep_classifier.clear();
    spec.sweep_random.clear();
  }

  spec.eval.cost.llm_usd_per_1k_prompt_tokens =
      cfg.get_double("cost", "llm_usd_per_1k_prompt_tokens", 0.01);
  spec.eval.cost.llm_usd_per_1k_completion_tokens =
      cfg.get_double("cost", "llm_usd_per_1k_completion_tokens", 0.01);

  spec.eval.latency.slm_s = cfg.get_double("latency", "slm_s", 3.0);
  spec.eval.latency.llm_s = cfg.get_double("latency", "llm_s", 5.5);
  spec.eval.latency.network_s = cfg.get_double("latency", "network_s", 0.58);
  spec.eval.latency.budget_s = cfg.get_double("latency", "budget_s", 300.0);

  spec.eval.depth_cap = g.depth_cap;

  spec.predictor_mode = cfg.get_string("predictor", "mode", "trace");
  if (spec.predictor_mode != "trace" && spec.predictor_mode != "remote")
    throw SpecError(0, "predictor.mode must be trace or remote");
  spec.predictor_endpoint = cfg.get_string("predictor", "endpoint", "");
  if (spec.predictor_mode == "remote" && spec.predictor_endpoint.empty())
    throw SpecError(0, "predictor.endpoint required when predictor.mode = remote");
  spec.predictor_noise = cfg.get_double("predictor", "noise", 0.0);
  spec.noise_seed = static_cast<uint64_t>(cfg.get_int("predictor", "noise_seed", 7));

  spec.embedder_mode = cfg.get_string("embedder", "mode", "builtin");
  if (spec.embedder_mode != "builtin" && spec.embedder_mode != "remote")
    throw SpecError(0, "embedder.mode must be builtin or remote");
  spec.embedder_endpoint = cfg.get_string("embedder", "endpoint", "");
  if (spec.embedder_mode == "remote" && spec.embedder_endpoint.empty())
    throw SpecError(0, "embedder.endpoint required when embedder.mode = remote");
  spec.label = cfg.get_string("workload", "label", "");
  return spec;
}

RouterConfig hera_with_threshold(RouterConfig base, double threshold) {
  base.schedule.base = threshold - base.schedule.cap_id * base.schedule.step;
  base.schedule.flat_default = threshold;
  base.urc_threshold = threshold;
  return base;
}

WorkloadBundle load_workload(const ExperimentSpec& spec) {
  if (spec.embedder_mode == "remote") {
    set_active_embedder(std::make_shared<RemoteEmbedder>(spec.embedder_endpoint));
  } else {
    set_active_embedder(nullptr);
  }
  WorkloadBundle bundle;
  if (spec.source == "generate") {
    Workload wl = generate_workload(spec.generator);
    bundle.store = wl.store;
    bundle.world = std::make_shared<ProfileWorld>(wl.store);
    bundle.traces = wl.traces(false);
    char buf[48];
    std::snprintf(buf, sizeof(buf), "synthetic-seed%llu",
                  static_cast<unsigned long long>(spec.generator.seed));
    bundle.label = buf;
  } else {
    std::vector<SubtaskTrace> traces;
    try {
      traces = load_traces(spec.path);
    } catch (const std::exception& e) {
      throw IoError(e.what());
    }
    for (const SubtaskTrace& t : traces) validate_trace(t, spec.generator.depth_cap);
    auto store = std::make_shared<TraceStore>(TraceStore::from_traces(traces));
    bundle.store = store;
    bundle.world = std::make_shared<TraceWorld>(traces);
    bundle.traces = std::move(traces);
    std::filesystem::path p(spec.path);
    bundle.label = p.stem().string();
  }
  if (!spec.label.empty()) bundle.label = spec.label;

  std::shared_ptr<const PredictorSuite> base_suite;
  if (spec.predictor_mode == "remote") {
    base_suite = std::make_shared<RemoteSuite>(spec.predictor_endpoint);
  } else {
    base_suite = std::make_shared<TraceBackedSuite>(bundle.store);
  }
  if (spec.predictor_noise > 0.0) {
    bundle.suite = std::make_shared<NoisySuite>(base_suite, spec.predictor_noise, spec.noise_seed);
  } else {
    bundle.suite = base_suite;
  }
  for (const RequestProfile& p : bundle.store->profiles()) bundle.requests.push_back(p.request);
  return bundle;
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string report_row(const std::string& workload, const PolicyReport& r) {
  std::string out = workload + "," + r.policy;
  for (double v : {r.accuracy, r.slm_usage, r.completion_rate, r.avg_subtasks, r.cost_usd,
                   r.sim_latency_s})
    out += "," + fmt(v);
  out += "," + std::to_string(r.requests);
  out += "\n";
  return out;
}

json report_json(const PolicyReport& r) {
  return json{{"policy", r.policy},
              {"accuracy", r.accuracy},
              {"slm_usage", r.slm_usage},
              {"completion_rate", r.completion_rate},
              {"avg_subtasks", r.avg_subtasks},
              {"cost_usd", r.cost_usd},
              {"sim_latency_s", r.sim_latency_s},
              {"requests", r.requests}};
}

std::string cpt_cell(const CptValue& v) {
  if (v.degenerate) return "0.00";
  if (!v.attainable) return "NA";
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%.2f", v.value * 100.0);
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec, const std::string& out_dir) {
  WorkloadBundle bundle = load_workload(spec);
  const auto& suite = *bundle.suite;
  const auto& world = *bundle.world;
  const auto& requests = bundle.requests;

  ExperimentResult result;
  json meta;
  meta["workload"] = bundle.label;
  meta["requests"] = requests.size();

  // Policy runs (detailed, for assignments and the routing log).
  std::vector<std::pair<Policy, PolicyRun>> runs;
  auto add_run = [&](const Policy& p) {
    runs.emplace_back(p, run_policy_detailed(p, suite, world, requests, spec.eval));
    result.reports.push_back(runs.back().second.report);
  };
  if (spec.run_all_slm) add_run(Policy::all_slm());
  if (spec.run_all_llm) add_run(Policy::all_llm());
  for (double p : spec.random_p) add_run(Policy::random(p, spec.generator.seed));
  for (double t : spec.classifier_thresholds) add_run(Policy::classifier(t));
  if (spec.run_hera) add_run(Policy::hera_policy(spec.hera));

  // Oracle comparison.
  json oracle_json;
  std::vector<Assignment> oracle_assignments;
  if (spec.oracle_enabled) {
    OracleOptions opt;
    opt.accuracy_floor_frac = spec.oracle_floor;
    opt.judge = spec.eval.judge;
    opt.depth_cap = spec.eval.depth_cap;
    WorkloadOracle wo = oracle_workload(world, requests, opt, spec.oracle_workload_level);
    double usage = 0.0;
    int correct = 0, unreachable = 0, approximate = 0;
    double subtasks = 0.0;
    for (const OracleResult& r : wo.per_request) {
      usage += r.slm_usage;
      subtasks += r.units;
      correct += r.correct ? 1 : 0;
      unreachable += r.floor_unreachable ? 1 : 0;
      approximate += r.approximate ? 1 : 0;
      oracle_assignments.push_back(r.assignment);
    }
    PolicyReport orep;
    orep.policy = "oracle";
    orep.requests = static_cast<int>(wo.per_request.size());
    orep.accuracy = wo.accuracy;
    orep.slm_usage = usage / wo.per_request.size();
    orep.avg_subtasks = subtasks / wo.per_request.size();
    orep.completion_rate = 1.0;
    result.reports.push_back(orep);

    oracle_json["criterion"] = wo.criterion;
    oracle_json["floor_value"] = wo.floor_value;
    oracle_json["accuracy"] = wo.accuracy;
    oracle_json["slm_usage"] = orep.slm_usage;
    oracle_json["floor_unreachable"] = unreachable;
    oracle_json["approximate"] = approximate;

    for (const auto& [policy, run] : runs) {
      std::vector<Assignment> assignments;
      assignments.reserve(run.outcomes.size());
      for (const RequestOutcome& oc : run.outcomes) assignments.push_back(oc.assignment);
      result.incorrect_rates[policy.label()] =
          incorrect_assignment_rate(assignments, oracle_assignments);
    }
  }

  // Threshold/probability sweeps feeding the CPT tables.
  std::string cpt_csv = "dataset,method,cpt50,cpt70,cpt90\n";
  json cpt_json;
  {
    double gap_low = 0.0, gap_high = 0.0;
    {
      PolicyReport slm = run_policy(Policy::all_slm(), suite, world, requests, spec.eval);
      PolicyReport llm = run_policy(Policy::all_llm(), suite, world, requests, spec.eval);
      gap_low = slm.accuracy;
      gap_high = llm.accuracy;
    }
    auto family = [&](const std::string& method, const std::vector<double>& params,
                      auto make_policy) {
      if (params.empty()) return;
      CptCurve curve;
      curve.gap_low = gap_low;
      curve.gap_high = gap_high;
      for (double p : params) {
        PolicyReport r = run_policy(make_policy(p), suite, world, requests, spec.eval);
        curve.points.emplace_back(1.0 - r.slm_usage, r.accuracy);
      }
      CptValue c50 = cpt(curve, 50.0), c70 = cpt(curve, 70.0), c90 = cpt(curve, 90.0);
      cpt_csv += bundle.label + "," + method + "," + cpt_cell(c50) + "," + cpt_cell(c70) + "," +
                 cpt_cell(c90) + "\n";
      json fam;
      fam["points"] = json::array();
      for (const auto& [f, a] : curve.points) fam["points"].push_back({{"llm_fraction", f}, {"accuracy", a}});
      fam["cpt50"] = c50.degenerate ? 0.0 : c50.value;
      fam["cpt70"] = c70.degenerate ? 0.0 : c70.value;
      fam["cpt90"] = c90.degenerate ? 0.0 : c90.value;
      fam["degenerate"] = c50.degenerate;
      cpt_json[method] = std::move(fam);
    };
    family("hera", spec.sweep_hera,
           [&](double t) { return Policy::hera_policy(hera_with_threshold(spec.hera, t)); });
    family("classifier", spec.sweep_classifier, [](double t) { return Policy::classifier(t); });
    family("random", spec.sweep_random,
           [&](double p) { return Policy::random(p, spec.generator.seed); });
  }
  result.cpt_csv = cpt_csv;

  // S-L similarity profile over the workload's traces.
  {
    EmbeddingCache cache(builtin_embedder());
    auto rows = sl_similarity_profile(bundle.traces, bundle.store->sl_threshold(),
                                      spec.eval.judge.threshold, cache);
    result.slprofile_csv = profile_to_csv(rows);
  }

  // Routing log for the routed policy.
  for (const auto& [policy, run] : runs) {
    if (policy.kind != Policy::Kind::Hera) continue;
    for (const RequestOutcome& oc : run.outcomes) {
      for (const RoutingDecision& d : oc.decisions) {
        json j;
        j["request_id"] = oc.request_id;
        j["seq_id"] = d.subtask_seq_id;
        j["choice"] = model_name(d.choice);
        j["stage"] = stage_name(d.stage);
        j["detail"] = d.detail;
        j["kappa"] = d.kappa ? json(*d.kappa) : json(nullptr);
        j["score"] = d.score ? json(*d.score) : json(nullptr);
        result.routing_log += j.dump();
        result.routing_log += '\n';
      }
    }
  }

  // Assemble report files.
  std::string reports_csv =
      "workload,policy,accuracy,slm_usage,completion_rate,avg_subtasks,cost_usd,sim_latency_s,"
      "requests\n";
  json reports_json_arr = json::array();
  for (const PolicyReport& r : result.reports) {
    reports_csv += report_row(bundle.label, r);
    reports_json_arr.push_back(report_json(r));
  }
  result.reports_csv = reports_csv;

  std::string incorrect_csv = "policy,rate,requests\n";
  for (const auto& [policy, rate] : result.incorrect_rates)
    incorrect_csv += policy + "," + fmt(rate) + "," + std::to_string(requests.size()) + "\n";

  json root;
  root["meta"] = std::move(meta);
  root["reports"] = std::move(reports_json_arr);
  if (!oracle_json.is_null()) root["oracle"] = std::move(oracle_json);
  if (!cpt_json.is_null()) root["cpt"] = std::move(cpt_json);
  if (!result.incorrect_rates.empty()) {
    json inc;
    for (const auto& [policy, rate] : result.incorrect_rates) inc[policy] = rate;
    root["incorrect_assignment"] = std::move(inc);
  }
  result.reports_json = root.dump(2) + "\n";

  if (!out_dir.empty()) {
    std::filesystem::path dir(out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory: " + out_dir);
    write_file(dir / "reports.json", result.reports_json);
    write_file(dir / "reports.csv", result.reports_csv);
    write_file(dir / "cpt.csv", result.cpt_csv);
    write_file(dir / "incorrect_assignment.csv", incorrect_csv);
    write_file(dir / "slprofile.csv", result.slprofile_csv);
    write_file(dir / "routing_log.jsonl", result.routing_log);
  }
  return result;
}

ExperimentResult run_experiment_file(const std::string& spec_path, const std::string& out_dir) {
  KvConfig cfg = KvConfig::parse_file(spec_path);
  ExperimentSpec spec = ExperimentSpec::from_config(cfg);
  return run_experiment(spec, out_dir);
}

}  // namespace hera
