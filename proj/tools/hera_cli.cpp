// hera: subtask-level SLM/LLM routing engine and evaluation harness.
//
// Exit codes: 0 success, 2 spec/config error, 3 I/O error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "hera/config.hpp"
#include "hera/evaluation.hpp"
#include "hera/experiment.hpp"
#include "hera/generator.hpp"
#include "hera/predictors.hpp"
#include "hera/remote.hpp"
#include "hera/router.hpp"
#include "hera/slmetrics.hpp"
#include "hera/world.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitSpec = 2;
constexpr int kExitIo = 3;

void write_or_throw(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw hera::IoError("cannot write " + path.string());
  out << content;
}

std::filesystem::path ensure_out_dir(const std::string& out) {
  std::filesystem::path dir(out);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw hera::IoError("cannot create output directory: " + out);
  return dir;
}

hera::RouterConfig router_from_file(const std::string& path) {
  hera::RouterConfig rc;
  if (path.empty()) return rc;
  hera::KvConfig cfg = hera::KvConfig::parse_file(path);
  // Accept both a bare key=value file (empty section) and a [hera] section.
  std::string section = cfg.has_section("hera") ? "hera" : "";
  rc.urc_threshold = cfg.get_double(section, "urc_threshold", rc.urc_threshold);
  rc.schedule.base = cfg.get_double(section, "threshold_base", rc.schedule.base);
  rc.schedule.step = cfg.get_double(section, "threshold_step", rc.schedule.step);
  rc.schedule.cap_id = cfg.get_int(section, "threshold_cap_id", rc.schedule.cap_id);
  rc.schedule.flat_default = cfg.get_double(section, "threshold_flat", rc.schedule.flat_default);
  rc.cd_horizon = cfg.get_int(section, "cd_horizon", rc.cd_horizon);
  rc.sd_max = cfg.get_int(section, "sd_max", rc.sd_max);
  rc.depth_cap = cfg.get_int(section, "depth_cap", rc.depth_cap);
  rc.enable_urc = cfg.get_bool(section, "enable_urc", rc.enable_urc);
  rc.enable_sse = cfg.get_bool(section, "enable_sse", rc.enable_sse);
  rc.enable_sle = cfg.get_bool(section, "enable_sle", rc.enable_sle);
  rc.enable_cd = cfg.get_bool(section, "enable_cd", rc.enable_cd);
  rc.enable_sd = cfg.get_bool(section, "enable_sd", rc.enable_sd);
  rc.validate();
  return rc;
}

struct LoadedTraces {
  std::vector<hera::SubtaskTrace> traces;
  std::shared_ptr<const hera::TraceStore> store;
  std::shared_ptr<const hera::ExecutionWorld> world;
  std::shared_ptr<const hera::PredictorSuite> suite;
};

void select_embedder(const std::string& mode, const std::string& endpoint) {
  if (mode == "builtin") {
    hera::set_active_embedder(nullptr);
  } else if (mode == "remote") {
    if (endpoint.empty())
      throw hera::SpecError(0, "--embedder-endpoint required with --embedder remote");
    hera::set_active_embedder(std::make_shared<hera::RemoteEmbedder>(endpoint));
  } else {
    throw hera::SpecError(0, "embedder must be builtin or remote");
  }
}

LoadedTraces load_for_routing(const std::string& traces_path, const std::string& predictor_mode,
                              const std::string& endpoint) {
  LoadedTraces lt;
  lt.traces = hera::load_traces(traces_path);
  if (lt.traces.empty()) throw hera::IoError("no traces in " + traces_path);
  for (const auto& t : lt.traces) hera::validate_trace(t);
  auto store = std::make_shared<hera::TraceStore>(hera::TraceStore::from_traces(lt.traces));
  lt.store = store;
  lt.world = std::make_shared<hera::TraceWorld>(lt.traces);
  if (predictor_mode == "remote") {
    lt.suite = std::make_shared<hera::RemoteSuite>(endpoint);
  } else if (predictor_mode == "trace") {
    lt.suite = std::make_shared<hera::TraceBackedSuite>(store);
  } else {
    throw hera::SpecError(0, "predictor mode must be trace or remote");
  }
  return lt;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Subtask-level SLM/LLM routing engine and evaluation harness"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Generate a synthetic trace workload");
  uint64_t gen_seed = 0;
  int gen_n = 200;
  std::string gen_out = "out";
  bool gen_branches = true;
  double gen_matched = 0.21;
  int gen_token_len = 12;
  gen->add_option("--seed", gen_seed, "Generator seed")->required();
  gen->add_option("--n", gen_n, "Number of requests");
  gen->add_option("--out", gen_out, "Output directory");
  gen->add_flag("--branches,!--no-branches", gen_branches,
                "Materialize the mixed execution branches (default on)");
  gen->add_option("--matched-fraction", gen_matched, "Matched-final fraction");
  gen->add_option("--token-len", gen_token_len, "Tokens per subtask text");

  // route
  auto* route = app.add_subcommand("route", "Route requests from a trace file");
  std::string route_traces, route_out = "out", route_config;
  std::string route_predictor = "trace", route_endpoint;
  route->add_option("--traces", route_traces, "Trace JSONL file")->required();
  route->add_option("--out", route_out, "Output directory");
  route->add_option("--config", route_config, "Router config (key = value)");
  route->add_option("--predictor", route_predictor, "Predictor mode: trace|remote");
  route->add_option("--endpoint", route_endpoint, "Remote predictor endpoint");
  std::string route_embedder = "builtin", route_embedder_endpoint;
  route->add_option("--embedder", route_embedder, "Embedder: builtin|remote");
  route->add_option("--embedder-endpoint", route_embedder_endpoint, "Remote embedder endpoint");

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "Run an experiment spec");
  std::string eval_spec, eval_out = "out";
  eval->add_option("--spec", eval_spec, "Experiment spec file")->required();
  eval->add_option("--out", eval_out, "Output directory");

  // oracle
  auto* orc = app.add_subcommand("oracle", "Optimal assignments by enumeration");
  std::string orc_traces, orc_out = "out", orc_mode = "per_request";
  double orc_floor = 0.9;
  orc->add_option("--traces", orc_traces, "Trace JSONL file")->required();
  orc->add_option("--out", orc_out, "Output directory");
  orc->add_option("--floor", orc_floor, "Accuracy floor fraction of All-LLM");
  orc->add_option("--mode", orc_mode, "per_request|workload");

  // cpt
  auto* cptcmd = app.add_subcommand("cpt", "Threshold sweeps and CPT table");
  std::string cpt_traces, cpt_out = "out";
  cptcmd->add_option("--traces", cpt_traces, "Trace JSONL file")->required();
  cptcmd->add_option("--out", cpt_out, "Output directory");

  // slprofile
  auto* slp = app.add_subcommand("slprofile", "S-L similarity profile");
  std::string slp_traces, slp_out = "out";
  double slp_threshold = 0.7;
  slp->add_option("--traces", slp_traces, "Trace JSONL file")->required();
  slp->add_option("--out", slp_out, "Output directory");
  slp->add_option("--threshold", slp_threshold, "Match threshold");
  std::string slp_matcher = "greedy";
  slp->add_option("--matcher", slp_matcher, "Matcher: greedy|optimal");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitSpec;
  }

  try {
    if (gen->parsed()) {
      hera::GeneratorConfig cfg;
      cfg.seed = gen_seed;
      cfg.n_requests = gen_n;
      cfg.matched_final_fraction = gen_matched;
      cfg.token_len = gen_token_len;
      hera::Workload wl = hera::generate_workload(cfg);
      auto dir = ensure_out_dir(gen_out);
      hera::save_traces(wl.traces(gen_branches), (dir / "traces.jsonl").string());
      std::printf("wrote %d traces to %s\n", cfg.n_requests,
                  (dir / "traces.jsonl").string().c_str());
    } else if (route->parsed()) {
      select_embedder(route_embedder, route_embedder_endpoint);
      LoadedTraces lt = load_for_routing(route_traces, route_predictor, route_endpoint);
      hera::RouterConfig rc = router_from_file(route_config);
      auto dir = ensure_out_dir(route_out);
      std::string log;
      std::string summary = "request_id,finished,units,slm_usage,final_len\n";
      for (const auto& t : lt.traces) {
        hera::RoutedExecution rx = hera::route_request(rc, *lt.suite, *lt.world, t.request);
        for (const auto& line : {hera::routing_log_jsonl(rx)}) log += line;
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%s,%d,%zu,%.6f,%zu\n", rx.request_id.c_str(),
                      rx.finished ? 1 : 0, rx.executed.size(), rx.slm_usage(),
                      rx.final_output.size());
        summary += buf;
      }
      write_or_throw(dir / "routing_log.jsonl", log);
      write_or_throw(dir / "routing_summary.csv", summary);
      std::printf("routed %zu requests\n", lt.traces.size());
    } else if (eval->parsed()) {
      hera::run_experiment_file(eval_spec, eval_out);
      std::printf("experiment reports written to %s\n", eval_out.c_str());
    } else if (orc->parsed()) {
      LoadedTraces lt = load_for_routing(orc_traces, "trace", "");
      hera::OracleOptions opt;
      opt.accuracy_floor_frac = orc_floor;
      if (orc_mode != "per_request" && orc_mode != "workload")
        throw hera::SpecError(0, "oracle mode must be per_request or workload");
      std::vector<hera::UserRequest> requests;
      for (const auto& t : lt.traces) requests.push_back(t.request);
      hera::WorkloadOracle wo =
          hera::oracle_workload(*lt.world, requests, opt, orc_mode == "workload");
      auto dir = ensure_out_dir(orc_out);
      std::string csv = "request_id,assignment,slm_usage,units,correct,floor_unreachable,approximate\n";
      for (size_t i = 0; i < wo.per_request.size(); ++i) {
        const hera::OracleResult& r = wo.per_request[i];
        char buf[220];
        std::snprintf(buf, sizeof(buf), "%s,%s,%.6f,%d,%d,%d,%d\n", requests[i].id.c_str(),
                      r.assignment.bits().c_str(), r.slm_usage, r.units, r.correct ? 1 : 0,
                      r.floor_unreachable ? 1 : 0, r.approximate ? 1 : 0);
        csv += buf;
      }
      write_or_throw(dir / "oracle.csv", csv);
      std::printf("oracle (%s criterion): accuracy %.4f\n", wo.criterion.c_str(), wo.accuracy);
    } else if (cptcmd->parsed()) {
      hera::ExperimentSpec spec;
      spec.source = "file";
      spec.path = cpt_traces;
      spec.oracle_enabled = false;
      hera::ExperimentResult res = hera::run_experiment(spec, "");
      auto dir = ensure_out_dir(cpt_out);
      write_or_throw(dir / "cpt.csv", res.cpt_csv);
      std::printf("cpt table written to %s\n", (dir / "cpt.csv").string().c_str());
    } else if (slp->parsed()) {
      auto traces = hera::load_traces(slp_traces);
      if (traces.empty()) throw hera::IoError("no traces in " + slp_traces);
      if (slp_matcher != "greedy" && slp_matcher != "optimal")
        throw hera::SpecError(0, "--matcher must be greedy or optimal");
      hera::EmbeddingCache cache(hera::active_embedder());
      auto rows = hera::sl_similarity_profile(traces, slp_threshold, slp_threshold, cache,
                                              slp_matcher == "greedy"
                                                  ? hera::MatcherKind::Greedy
                                                  : hera::MatcherKind::Optimal);
      auto dir = ensure_out_dir(slp_out);
      write_or_throw(dir / "slprofile.csv", hera::profile_to_csv(rows));
      std::printf("profile written to %s\n", (dir / "slprofile.csv").string().c_str());
    }
  } catch (const hera::SpecError& e) {
    std::fprintf(stderr, "spec error: %s\n", e.what());
    return kExitSpec;
  } catch (const hera::IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return kExitIo;
  } catch (const hera::TraceError& e) {
    std::fprintf(stderr, "trace error: %s\n", e.what());
    return kExitSpec;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitSpec;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  }
  return kExitOk;
}
