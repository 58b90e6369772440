#pragma once

// Experiment orchestration: spec-driven workload setup, policy runs, CPT
// sweeps, oracle comparison, S-L profiles and routing logs, all written as a
// deterministic report bundle.

#include <map>
#include <string>
#include <vector>

#include "hera/config.hpp"
#include "hera/evaluation.hpp"
#include "hera/generator.hpp"
#include "hera/predictors.hpp"
#include "hera/world.hpp"

namespace hera {

struct ExperimentSpec {
  // workload
  std::string source = "generate";  // generate | file
  std::string path;                 // trace file when source = file
  GeneratorConfig generator;

  // policies
  bool run_all_slm = true;
  bool run_all_llm = true;
  std::vector<double> random_p = {0.5};
  std::vector<double> classifier_thresholds = {0.7};
  bool run_hera = true;
  RouterConfig hera;

  // oracle
  bool oracle_enabled = true;
  double oracle_floor = 0.9;
  bool oracle_workload_level = false;

  // sweeps feeding the CPT tables (empty disables)
  std::vector<double> sweep_hera = {0.5, 0.6, 0.7, 0.8, 0.9};
  std::vector<double> sweep_classifier = {0.4, 0.5, 0.6, 0.7, 0.8};
  std::vector<double> sweep_random = {0.0, 0.25, 0.5, 0.75, 1.0};

  EvalSettings eval;
  std::string predictor_mode = "trace";  // trace | remote
  std::string predictor_endpoint;
  double predictor_noise = 0.0;
  uint64_t noise_seed = 7;
  std::string embedder_mode = "builtin";  // builtin | remote
  std::string embedder_endpoint;
  std::string label = "workload";

  static ExperimentSpec from_config(const KvConfig& cfg);
};

// Maps a swept similarity threshold onto a router configuration: the
// schedule shifts so its cap equals the threshold, and the request gate
// follows the same knob.
RouterConfig hera_with_threshold(RouterConfig base, double threshold);

struct ExperimentResult {
  std::vector<PolicyReport> reports;
  std::map<std::string, double> incorrect_rates;  // policy -> rate vs oracle
  std::string cpt_csv;
  std::string reports_csv;
  std::string reports_json;
  std::string slprofile_csv;
  std::string routing_log;
};

// Runs the experiment and writes the report bundle under out_dir:
// reports.json, reports.csv, cpt.csv, incorrect_assignment.csv,
// slprofile.csv, routing_log.jsonl.
ExperimentResult run_experiment(const ExperimentSpec& spec, const std::string& out_dir);
ExperimentResult run_experiment_file(const std::string& spec_path, const std::string& out_dir);

// Builds (suite, world, requests, traces) for a spec, shared by the CLI.
struct WorkloadBundle {
  std::shared_ptr<const TraceStore> store;
  std::shared_ptr<const PredictorSuite> suite;
  std::shared_ptr<const ExecutionWorld> world;
  std::vector<UserRequest> requests;
  std::vector<SubtaskTrace> traces;  // path-level traces for profiles
  std::string label;
};

WorkloadBundle load_workload(const ExperimentSpec& spec);

}  // namespace hera
