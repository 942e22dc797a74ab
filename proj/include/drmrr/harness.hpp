#ifndef DRMRR_HARNESS_HPP_
#define DRMRR_HARNESS_HPP_

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "drmrr/dataset.hpp"
#include "drmrr/gtd.hpp"
#include "drmrr/metrics.hpp"
#include "drmrr/ranker.hpp"
#include "drmrr/robustness.hpp"
#include "drmrr/solver.hpp"

namespace drmrr {

/*! \brief Parameters of the built-in synthetic dataset generator. */
struct SyntheticSpec {
  int num_queries = 50;
  int docs_per_query = 20;
  int p = 20;
  int y_max = 2;
  double noise = 0.1;
};

/*!
 * \brief Everything one experiment needs: data source, GTD parameters,
 * solver grid, metrics, attacks, and fold/seed bookkeeping. Loaded from a
 * JSON file; every field has a default so configs stay short.
 */
struct ExperimentConfig {
  std::string dataset_path;  // empty => synthetic
  bool use_synthetic = true;
  SyntheticSpec synthetic;
  bool normalize = true;
  GtdParams gtd;
  std::vector<double> epsilon_grid = {0.0, 1e-4, 1e-3, 1e-2, 1e-1, 1.0};
  NormOrder r = NormOrder::kTwo;
  SolverConfig solver;
  std::vector<int> metric_ks = {5, 10};
  std::vector<AttackSpec> attacks;
  std::vector<std::string> models = {"drmrr", "erm", "pointwise"};
  int folds = 5;
  uint64_t seed = 0;
  std::string output_dir = "out";

  /*! \brief Throws when grids/models are empty, folds < 2, or a referenced
   * dataset file does not exist. */
  void Validate() const;
};

ExperimentConfig ParseExperimentConfig(const nlohmann::json& j);
ExperimentConfig LoadExperimentConfig(const std::string& path);
nlohmann::json ConfigToJson(const ExperimentConfig& config);

/*! \brief FNV-1a hash (hex) of the canonical JSON form; identical configs
 * hash identically. */
std::string ConfigHash(const ExperimentConfig& config);

/*!
 * \brief One evaluated (fold, model, attack) cell. `attack` is "clean" or
 * an attack kind name; `attack_param` is the swept magnitude (mu, eta, or
 * e; 0 for clean) so degradation curves can be plotted straight from the
 * records. Everything except wall_ms is a pure function of the config.
 */
struct RunRecord {
  std::string config_hash;
  int fold = 0;
  std::string model;
  std::string attack = "clean";
  double attack_param = 0.0;
  MetricsReport metrics;
  double wall_ms = 0.0;
};

nlohmann::json RecordToJson(const RunRecord& record);
RunRecord RecordFromJson(const nlohmann::json& j);

/*! \brief Stacks one query's feature vectors into an n_q x p matrix. */
Eigen::MatrixXd QueryFeatureMatrix(const Query& query, int p);

/*! \brief Stacked (X, Theta) over the given queries, with Theta rows the
 * GTD targets. */
TrainingSet BuildGtdTrainingSet(const std::vector<const Query*>& queries,
                                int p, const GtdParams& params);

/*! \brief Stacked features and raw scalar grades for the pointwise model
 * and the adversary. */
void BuildScalarTrainingSet(const std::vector<const Query*>& queries, int p,
                            Eigen::MatrixXd* X, Eigen::VectorXd* y);

/*! \brief Grid point with its fitted weights and validation score. */
struct TunedModel {
  double epsilon = 0.0;
  ModelWeights weights;
  double val_ndcg5 = 0.0;
};

/*!
 * \brief Fits one model per grid epsilon on the training queries and keeps
 * the one maximizing NDCG@5 on the validation queries; exact ties keep the
 * smaller epsilon.
 */
TunedModel TuneEpsilon(const std::vector<const Query*>& train,
                       const std::vector<const Query*>& val, int p,
                       const std::vector<double>& grid,
                       const GtdParams& gtd_params, NormOrder r,
                       const SolverConfig& solver_config);

/*! \brief Results of a cross-validation run: records plus the TREC run
 * files (name -> contents) produced on the clean test folds. */
struct CvOutputs {
  std::vector<RunRecord> records;
  std::map<std::string, std::string> trec_runs;
};

/*!
 * \brief The full protocol. For each fold f: test = fold f, validation =
 * fold (f mod F) + 1, train = the rest. Tunes epsilon per fold, fits the
 * ERM (epsilon = 0) and pointwise baselines, evaluates every configured
 * model under clean conditions and every configured attack.
 *
 * Label poisoning retrains on poisoned training folds (validation and test
 * stay clean); the other attacks perturb only test features. Black-box
 * substitutes imitate each victim separately; the attacked query subset is
 * shared across victims.
 */
CvOutputs RunCv(const ExperimentConfig& config);

/*!
 * \brief Writes records.json, summary.csv (mean and SD over folds per
 * model/attack/metric, one row per sweep point), and the TREC run files
 * under out_dir. Throws on unwritable paths.
 */
void EmitReport(const CvOutputs& outputs, const ExperimentConfig& config,
                const std::string& out_dir);

}  // namespace drmrr

#endif  // DRMRR_HARNESS_HPP_
