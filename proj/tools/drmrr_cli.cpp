#include <CLI11.hpp>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "drmrr/dataset.hpp"
#include "drmrr/harness.hpp"

namespace {

using drmrr::AttackKind;
using drmrr::AttackSpec;
using drmrr::ConfigHash;
using drmrr::CvOutputs;
using drmrr::EmitReport;
using drmrr::ExperimentConfig;
using drmrr::LoadExperimentConfig;
using drmrr::RunCv;

struct Overrides {
  std::string out_dir;
  uint64_t seed = 0;
  bool seed_set = false;
  int folds = 0;
};

ExperimentConfig LoadWithOverrides(const std::string& config_path,
                                   const Overrides& ov) {
  ExperimentConfig config = LoadExperimentConfig(config_path);
  if (ov.seed_set) {
    config.seed = ov.seed;
    config.solver.seed = ov.seed;
  }
  if (ov.folds > 0) config.folds = ov.folds;
  if (!ov.out_dir.empty()) config.output_dir = ov.out_dir;
  return config;
}

int DoValidate(const std::string& config_path) {
  const ExperimentConfig config = LoadExperimentConfig(config_path);
  config.Validate();
  std::cout << "config ok, hash " << ConfigHash(config) << '\n';
  if (config.use_synthetic) {
    std::cout << "dataset: synthetic, " << config.synthetic.num_queries
              << " queries x " << config.synthetic.docs_per_query
              << " documents, p = " << config.synthetic.p << '\n';
  } else {
    const drmrr::RankingDataset ds = drmrr::ParseLetorFile(config.dataset_path);
    std::cout << "dataset: " << config.dataset_path << ", "
              << ds.NumQueries() << " queries, " << ds.NumDocuments()
              << " documents, p = " << ds.p << ", grades 0.." << ds.y_max
              << '\n';
  }
  std::cout << "models:";
  for (const std::string& m : config.models) std::cout << ' ' << m;
  std::cout << "\nepsilon grid:";
  for (double e : config.epsilon_grid) std::cout << ' ' << e;
  std::cout << "\nattacks: " << config.attacks.size() << '\n';
  return 0;
}

int DoRun(const ExperimentConfig& config) {
  const CvOutputs outputs = RunCv(config);
  EmitReport(outputs, config, config.output_dir);
  std::cout << "wrote " << outputs.records.size() << " records to "
            << config.output_dir << '\n';
  return 0;
}

int DoSweep(ExperimentConfig config, const std::string& kind_name,
            const std::vector<double>& values, double fraction, double sigma,
            uint64_t attack_seed) {
  const AttackKind kind = drmrr::AttackKindFromString(kind_name);
  config.attacks.clear();
  for (double v : values) {
    AttackSpec spec;
    spec.kind = kind;
    spec.fraction = fraction;
    spec.sigma = sigma;
    spec.seed = attack_seed;
    switch (kind) {
      case AttackKind::kGaussian:
        spec.mu = v;
        break;
      case AttackKind::kUniversalFgsm:
      case AttackKind::kBlackboxFgsm:
        spec.eta = v;
        break;
      case AttackKind::kLabelPoison:
        spec.e = v;
        break;
    }
    config.attacks.push_back(spec);
  }
  return DoRun(config);
}

int DoReport(const std::string& records_path, const std::string& out_dir) {
  std::ifstream in(records_path);
  if (!in) throw std::runtime_error("cannot read " + records_path);
  nlohmann::json arr;
  in >> arr;
  if (!arr.is_array() || arr.empty() || !arr.front().contains("config")) {
    throw std::runtime_error(
        "records file must start with the config object emitted by `run`");
  }
  const ExperimentConfig config =
      drmrr::ParseExperimentConfig(arr.front().at("config"));
  CvOutputs outputs;
  for (size_t i = 1; i < arr.size(); ++i) {
    outputs.records.push_back(drmrr::RecordFromJson(arr[i]));
  }
  EmitReport(outputs, config, out_dir);
  std::cout << "rewrote reports for " << outputs.records.size()
            << " records to " << out_dir << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DRMRR: distributionally robust multi-output regression "
               "ranking"};
  app.require_subcommand(1);

  std::string config_path;
  std::string records_path;
  Overrides ov;

  CLI::App* validate =
      app.add_subcommand("validate", "Parse and sanity-check a config file");
  validate->add_option("config", config_path, "JSON config file")->required();

  CLI::App* run = app.add_subcommand(
      "run", "Run cross-validation and write records/summary/run files");
  run->add_option("config", config_path, "JSON config file")->required();
  run->add_option("--out", ov.out_dir, "output directory (overrides config)");
  run->add_option("--folds", ov.folds, "fold count (overrides config)");
  auto* seed_opt =
      run->add_option("--seed", ov.seed, "seed (overrides config)");

  std::string sweep_kind;
  std::vector<double> sweep_values;
  double sweep_fraction = 0.75;
  double sweep_sigma = 0.001;
  uint64_t sweep_seed = 0;
  CLI::App* sweep = app.add_subcommand(
      "attack-sweep",
      "Run one attack kind over a list of magnitudes (mu, eta, or e)");
  sweep->add_option("config", config_path, "JSON config file")->required();
  sweep->add_option("--kind", sweep_kind, "attack kind")->required();
  sweep->add_option("--values", sweep_values, "swept magnitudes")
      ->required()
      ->delimiter(',');
  sweep->add_option("--fraction", sweep_fraction,
                    "fraction of test queries perturbed");
  sweep->add_option("--sigma", sweep_sigma, "Gaussian SD");
  sweep->add_option("--attack-seed", sweep_seed, "attack RNG seed");
  sweep->add_option("--out", ov.out_dir, "output directory (overrides config)");
  sweep->add_option("--folds", ov.folds, "fold count (overrides config)");
  auto* sweep_seed_opt =
      sweep->add_option("--seed", ov.seed, "seed (overrides config)");

  std::string report_out = "out";
  CLI::App* report = app.add_subcommand(
      "report", "Regenerate summary.csv from an existing records.json");
  report->add_option("records", records_path, "records.json path")->required();
  report->add_option("--out", report_out, "output directory");

  CLI11_PARSE(app, argc, argv);
  ov.seed_set = seed_opt->count() > 0 || sweep_seed_opt->count() > 0;

  try {
    if (validate->parsed()) return DoValidate(config_path);
    if (run->parsed()) return DoRun(LoadWithOverrides(config_path, ov));
    if (sweep->parsed()) {
      return DoSweep(LoadWithOverrides(config_path, ov), sweep_kind,
                     sweep_values, sweep_fraction, sweep_sigma, sweep_seed);
    }
    if (report->parsed()) return DoReport(records_path, report_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
