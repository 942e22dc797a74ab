#include "drmrr/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "drmrr/random.hpp"

namespace drmrr {

namespace {

constexpr const char* kKnownModels[] = {"drmrr", "erm", "pointwise"};

bool IsKnownModel(const std::string& name) {
  for (const char* m : kKnownModels) {
    if (name == m) return true;
  }
  return false;
}

}  // namespace

void ExperimentConfig::Validate() const {
  if (epsilon_grid.empty()) throw std::invalid_argument("empty epsilon grid");
  for (double eps : epsilon_grid) {
    if (!(eps >= 0.0)) throw std::invalid_argument("epsilon must be >= 0");
  }
  if (metric_ks.empty()) throw std::invalid_argument("empty metric k list");
  for (int k : metric_ks) {
    if (k < 1) throw std::invalid_argument("metric k must be >= 1");
  }
  if (models.empty()) throw std::invalid_argument("empty model list");
  for (const std::string& m : models) {
    if (!IsKnownModel(m)) throw std::invalid_argument("unknown model: " + m);
  }
  if (folds < 2) throw std::invalid_argument("folds must be >= 2");
  if (!use_synthetic && !std::filesystem::exists(dataset_path)) {
    throw std::invalid_argument("dataset file not found: " + dataset_path);
  }
  if (use_synthetic) {
    if (synthetic.num_queries < folds || synthetic.docs_per_query < 1 ||
        synthetic.p < 1 || synthetic.y_max < 1 || synthetic.noise < 0.0) {
      throw std::invalid_argument("bad synthetic spec");
    }
  }
  gtd.Validate();
  for (const AttackSpec& spec : attacks) spec.Validate();
}

ExperimentConfig ParseExperimentConfig(const nlohmann::json& j) {
  ExperimentConfig c;
  c.seed = j.value("seed", c.seed);
  c.folds = j.value("folds", c.folds);
  c.output_dir = j.value("output_dir", c.output_dir);
  c.normalize = j.value("normalize", c.normalize);
  if (j.contains("dataset")) {
    const auto& d = j.at("dataset");
    if (d.contains("path")) {
      c.dataset_path = d.at("path").get<std::string>();
      c.use_synthetic = false;
    } else if (d.contains("synthetic")) {
      const auto& s = d.at("synthetic");
      c.use_synthetic = true;
      c.synthetic.num_queries = s.value("num_queries", c.synthetic.num_queries);
      c.synthetic.docs_per_query =
          s.value("docs_per_query", c.synthetic.docs_per_query);
      c.synthetic.p = s.value("p", c.synthetic.p);
      c.synthetic.y_max = s.value("y_max", c.synthetic.y_max);
      c.synthetic.noise = s.value("noise", c.synthetic.noise);
    } else {
      throw std::invalid_argument("dataset needs either path or synthetic");
    }
  }
  if (j.contains("gtd")) {
    const auto& g = j.at("gtd");
    c.gtd.K = g.value("K", c.gtd.K);
    c.gtd.alpha = g.value("alpha", c.gtd.alpha);
    c.gtd.beta = g.value("beta", c.gtd.beta);
    c.gtd.log_base = g.value("log_base", c.gtd.log_base);
    c.gtd.y_max = g.value("y_max", c.gtd.y_max);
  }
  if (j.contains("solver")) {
    const auto& s = j.at("solver");
    if (s.contains("r")) c.r = NormOrderFromString(s.at("r").get<std::string>());
    if (s.contains("epsilon_grid")) {
      c.epsilon_grid = s.at("epsilon_grid").get<std::vector<double>>();
    }
    c.solver.max_iters = s.value("max_iters", c.solver.max_iters);
    c.solver.eta0 = s.value("eta0", c.solver.eta0);
    c.solver.tol = s.value("tol", c.solver.tol);
    c.solver.stall_window = s.value("stall_window", c.solver.stall_window);
    c.solver.power_iters = s.value("power_iters", c.solver.power_iters);
    c.solver.augment_bias = s.value("augment_bias", c.solver.augment_bias);
  }
  c.solver.seed = c.seed;
  if (j.contains("metric_ks")) {
    c.metric_ks = j.at("metric_ks").get<std::vector<int>>();
  }
  if (j.contains("models")) {
    c.models = j.at("models").get<std::vector<std::string>>();
  }
  if (j.contains("attacks")) {
    for (const auto& a : j.at("attacks")) {
      AttackSpec spec;
      spec.kind = AttackKindFromString(a.at("kind").get<std::string>());
      spec.fraction = a.value("fraction", spec.fraction);
      spec.mu = a.value("mu", spec.mu);
      spec.sigma = a.value("sigma", spec.sigma);
      spec.eta = a.value("eta", spec.eta);
      spec.e = a.value("e", spec.e);
      spec.seed = a.value("seed", spec.seed);
      c.attacks.push_back(spec);
    }
  }
  return c;
}

ExperimentConfig LoadExperimentConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config file: " + path);
  nlohmann::json j;
  in >> j;
  return ParseExperimentConfig(j);
}

nlohmann::json ConfigToJson(const ExperimentConfig& c) {
  nlohmann::json j;
  j["seed"] = c.seed;
  j["folds"] = c.folds;
  j["output_dir"] = c.output_dir;
  j["normalize"] = c.normalize;
  if (c.use_synthetic) {
    j["dataset"]["synthetic"] = {{"num_queries", c.synthetic.num_queries},
                                 {"docs_per_query", c.synthetic.docs_per_query},
                                 {"p", c.synthetic.p},
                                 {"y_max", c.synthetic.y_max},
                                 {"noise", c.synthetic.noise}};
  } else {
    j["dataset"]["path"] = c.dataset_path;
  }
  j["gtd"] = {{"K", c.gtd.K},
              {"alpha", c.gtd.alpha},
              {"beta", c.gtd.beta},
              {"log_base", c.gtd.log_base},
              {"y_max", c.gtd.y_max}};
  j["solver"] = {{"r", NormOrderName(c.r)},
                 {"epsilon_grid", c.epsilon_grid},
                 {"max_iters", c.solver.max_iters},
                 {"eta0", c.solver.eta0},
                 {"tol", c.solver.tol},
                 {"stall_window", c.solver.stall_window},
                 {"power_iters", c.solver.power_iters},
                 {"augment_bias", c.solver.augment_bias}};
  j["metric_ks"] = c.metric_ks;
  j["models"] = c.models;
  nlohmann::json attacks = nlohmann::json::array();
  for (const AttackSpec& spec : c.attacks) {
    attacks.push_back({{"kind", AttackKindName(spec.kind)},
                       {"fraction", spec.fraction},
                       {"mu", spec.mu},
                       {"sigma", spec.sigma},
                       {"eta", spec.eta},
                       {"e", spec.e},
                       {"seed", spec.seed}});
  }
  j["attacks"] = attacks;
  return j;
}

std::string ConfigHash(const ExperimentConfig& config) {
  const std::string dump = ConfigToJson(config).dump();
  uint64_t h = 1469598103934665603ULL;  // FNV-1a 64-bit
  for (unsigned char ch : dump) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

nlohmann::json RecordToJson(const RunRecord& r) {
  nlohmann::json j;
  j["config_hash"] = r.config_hash;
  j["fold"] = r.fold;
  j["model"] = r.model;
  j["attack"] = r.attack;
  j["attack_param"] = r.attack_param;
  j["wall_ms"] = r.wall_ms;
  j["means"] = r.metrics.means;
  j["per_query"] = r.metrics.per_query;
  return j;
}

RunRecord RecordFromJson(const nlohmann::json& j) {
  RunRecord r;
  r.config_hash = j.at("config_hash").get<std::string>();
  r.fold = j.at("fold").get<int>();
  r.model = j.at("model").get<std::string>();
  r.attack = j.at("attack").get<std::string>();
  r.attack_param = j.at("attack_param").get<double>();
  r.wall_ms = j.at("wall_ms").get<double>();
  r.metrics.fold = r.fold;
  r.metrics.means = j.at("means").get<std::map<std::string, double>>();
  r.metrics.per_query =
      j.at("per_query")
          .get<std::map<std::string, std::map<std::string, double>>>();
  return r;
}

Eigen::MatrixXd QueryFeatureMatrix(const Query& query, int p) {
  Eigen::MatrixXd X(query.documents.size(), p);
  for (size_t d = 0; d < query.documents.size(); ++d) {
    const Document& doc = query.documents[d];
    if (static_cast<int>(doc.features.size()) != p) {
      throw std::invalid_argument("query " + query.qid + " document " +
                                  doc.doc_id + " has " +
                                  std::to_string(doc.features.size()) +
                                  " features, expected " + std::to_string(p));
    }
    for (int f = 0; f < p; ++f) X(d, f) = doc.features[f];
  }
  return X;
}

TrainingSet BuildGtdTrainingSet(const std::vector<const Query*>& queries,
                                int p, const GtdParams& params) {
  int total = 0;
  for (const Query* q : queries) total += static_cast<int>(q->documents.size());
  TrainingSet set;
  set.X.resize(total, p);
  set.Theta.resize(total, params.K);
  int row = 0;
  for (const Query* q : queries) {
    const GtdMatrix gtd = BuildGtdMatrix(*q, params);
    set.X.middleRows(row, q->documents.size()) = QueryFeatureMatrix(*q, p);
    set.Theta.middleRows(row, q->documents.size()) = gtd.values;
    row += static_cast<int>(q->documents.size());
  }
  return set;
}

void BuildScalarTrainingSet(const std::vector<const Query*>& queries, int p,
                            Eigen::MatrixXd* X, Eigen::VectorXd* y) {
  int total = 0;
  for (const Query* q : queries) total += static_cast<int>(q->documents.size());
  X->resize(total, p);
  y->resize(total);
  int row = 0;
  for (const Query* q : queries) {
    X->middleRows(row, q->documents.size()) = QueryFeatureMatrix(*q, p);
    for (const Document& doc : q->documents) {
      (*y)(row++) = static_cast<double>(doc.label);
    }
  }
}

namespace {

std::vector<int> RankedLabels(const Query& query, const Ranking& ranking) {
  std::vector<int> labels;
  labels.reserve(ranking.order.size());
  for (int idx : ranking.order) labels.push_back(query.documents[idx].label);
  return labels;
}

std::vector<int> AllLabels(const Query& query) {
  std::vector<int> labels;
  labels.reserve(query.documents.size());
  for (const Document& doc : query.documents) labels.push_back(doc.label);
  return labels;
}

double MeanNdcg5(const std::vector<const Query*>& queries,
                 const ModelWeights& weights, int p, double log_base) {
  if (queries.empty()) return 0.0;
  double total = 0.0;
  for (const Query* q : queries) {
    const Ranking rk = RankFromGtd(PredictGtd(weights, QueryFeatureMatrix(*q, p)));
    total += NdcgAtK(RankedLabels(*q, rk), AllLabels(*q), 5, log_base);
  }
  return total / queries.size();
}

}  // namespace

TunedModel TuneEpsilon(const std::vector<const Query*>& train,
                       const std::vector<const Query*>& val, int p,
                       const std::vector<double>& grid,
                       const GtdParams& gtd_params, NormOrder r,
                       const SolverConfig& solver_config) {
  if (grid.empty()) throw std::invalid_argument("empty epsilon grid");
  std::vector<double> sorted_grid = grid;
  std::sort(sorted_grid.begin(), sorted_grid.end());
  const TrainingSet train_set = BuildGtdTrainingSet(train, p, gtd_params);

  TunedModel best;
  bool first = true;
  for (double eps : sorted_grid) {
    ModelWeights weights = Fit(train_set, eps, r, solver_config);
    const double score = MeanNdcg5(val, weights, p, gtd_params.log_base);
    if (first || score > best.val_ndcg5) {  // ties keep the smaller epsilon
      best.epsilon = eps;
      best.weights = std::move(weights);
      best.val_ndcg5 = score;
      first = false;
    }
  }
  return best;
}

namespace {

struct FoldModels {
  bool has_drmrr = false;
  bool has_erm = false;
  bool has_pointwise = false;
  TunedModel drmrr;
  ModelWeights erm;
  Eigen::VectorXd pointwise;
};

double AttackParam(const AttackSpec& spec) {
  switch (spec.kind) {
    case AttackKind::kGaussian:
      return spec.mu;
    case AttackKind::kUniversalFgsm:
    case AttackKind::kBlackboxFgsm:
      return spec.eta;
    case AttackKind::kLabelPoison:
      return spec.e;
  }
  return 0.0;
}

}  // namespace

CvOutputs RunCv(const ExperimentConfig& config) {
  config.Validate();

  RankingDataset ds =
      config.use_synthetic
          ? GenerateSynthetic(config.synthetic.num_queries,
                              config.synthetic.docs_per_query,
                              config.synthetic.p, config.synthetic.y_max,
                              config.synthetic.noise, config.seed)
          : ParseLetorFile(config.dataset_path);
  if (config.normalize) ds = NormalizeFeatures(ds);
  ds = SplitFolds(ds, config.folds, config.seed);

  GtdParams gtd = config.gtd;
  gtd.y_max = ds.y_max;  // importance scaling follows the data's grade range
  gtd.Validate();

  const std::string hash = ConfigHash(config);
  const auto has_model = [&](const char* name) {
    return std::find(config.models.begin(), config.models.end(), name) !=
           config.models.end();
  };

  CvOutputs out;
  for (int f = 1; f <= config.folds; ++f) {
    const int val_fold = (f % config.folds) + 1;
    std::vector<const Query*> train_q;
    std::vector<const Query*> val_q;
    std::vector<Query> test_queries;
    for (const Query& q : ds.queries) {
      const int fold = ds.folds.at(q.qid);
      if (fold == f) {
        test_queries.push_back(q);
      } else if (fold == val_fold) {
        val_q.push_back(&q);
      } else {
        train_q.push_back(&q);
      }
    }
    if (train_q.empty()) {
      throw std::runtime_error("fold " + std::to_string(f) +
                               " has no training queries");
    }

    RankingDataset test_ds;
    test_ds.queries = test_queries;
    test_ds.p = ds.p;
    test_ds.y_max = ds.y_max;

    Eigen::MatrixXd train_X;
    Eigen::VectorXd train_y;
    BuildScalarTrainingSet(train_q, ds.p, &train_X, &train_y);

    FoldModels models;
    models.has_drmrr = has_model("drmrr");
    models.has_erm = has_model("erm");
    models.has_pointwise = has_model("pointwise");
    if (models.has_drmrr) {
      models.drmrr = TuneEpsilon(train_q, val_q, ds.p, config.epsilon_grid,
                                 gtd, config.r, config.solver);
    }
    if (models.has_erm) {
      models.erm = Fit(BuildGtdTrainingSet(train_q, ds.p, gtd), 0.0, config.r,
                       config.solver);
    }
    if (models.has_pointwise) {
      models.pointwise = FitPointwiseLinear(train_X, train_y);
    }

    const auto rank_query = [&](const FoldModels& fm, const std::string& model,
                                const Query& q, Eigen::VectorXd* scores) {
      const Eigen::MatrixXd X = QueryFeatureMatrix(q, ds.p);
      if (model == "pointwise") {
        if (scores) *scores = X * fm.pointwise;
        return RankPointwise(fm.pointwise, X);
      }
      const ModelWeights& w =
          (model == "drmrr") ? fm.drmrr.weights : fm.erm;
      const Eigen::MatrixXd theta = PredictGtd(w, X);
      if (scores) *scores = theta.col(0);
      Ranking rk = RankFromGtd(theta);
      rk.source = model;
      return rk;
    };

    const auto evaluate = [&](const FoldModels& fm, const std::string& model,
                              const std::vector<Query>& queries,
                              std::ostream* trec) {
      MetricsReport report;
      report.fold = f;
      for (const Query& q : queries) {
        Eigen::VectorXd scores;
        const Ranking rk = rank_query(fm, model, q, trec ? &scores : nullptr);
        if (trec) {
          std::vector<std::string> doc_ids;
          for (const Document& doc : q.documents) doc_ids.push_back(doc.doc_id);
          WriteTrecRun(*trec, q.qid, doc_ids, rk, scores, model);
        }
        const std::vector<int> ranked = RankedLabels(q, rk);
        const std::vector<int> ideal = AllLabels(q);
        for (int k : config.metric_ks) {
          const std::string suffix = "@" + std::to_string(k);
          report.per_query[q.qid]["ndcg" + suffix] =
              NdcgAtK(ranked, ideal, k, gtd.log_base);
          report.per_query[q.qid]["ap" + suffix] = ApAtK(ranked, k);
        }
      }
      report.ComputeMeans();
      return report;
    };

    const auto timed_record = [&](const FoldModels& fm,
                                  const std::string& model,
                                  const std::vector<Query>& queries,
                                  const std::string& attack, double param,
                                  std::ostream* trec) {
      const auto t0 = std::chrono::steady_clock::now();
      MetricsReport report = evaluate(fm, model, queries, trec);
      const auto t1 = std::chrono::steady_clock::now();
      RunRecord record;
      record.config_hash = hash;
      record.fold = f;
      record.model = model;
      record.attack = attack;
      record.attack_param = param;
      record.metrics = std::move(report);
      record.wall_ms =
          std::chrono::duration<double, std::milli>(t1 - t0).count();
      out.records.push_back(std::move(record));
    };

    for (const std::string& model : config.models) {
      std::ostringstream trec;
      timed_record(models, model, test_queries, "clean", 0.0, &trec);
      out.trec_runs["run_fold" + std::to_string(f) + "_" + model + ".trec"] =
          trec.str();
    }

    for (const AttackSpec& base_spec : config.attacks) {
      AttackSpec spec = base_spec;
      spec.seed = Rng::DeriveSeed(base_spec.seed, static_cast<uint64_t>(f));
      const std::string attack_name = AttackKindName(spec.kind);
      const double param = AttackParam(spec);
      switch (spec.kind) {
        case AttackKind::kGaussian: {
          const RankingDataset attacked = GaussianAttack(test_ds, spec);
          for (const std::string& model : config.models) {
            timed_record(models, model, attacked.queries, attack_name, param,
                         nullptr);
          }
          break;
        }
        case AttackKind::kUniversalFgsm: {
          const Eigen::VectorXd w_adv = TrainLinearAdversary(train_X, train_y);
          const RankingDataset attacked =
              UniversalFgsmAttack(test_ds, w_adv, spec);
          for (const std::string& model : config.models) {
            timed_record(models, model, attacked.queries, attack_name, param,
                         nullptr);
          }
          break;
        }
        case AttackKind::kBlackboxFgsm: {
          // One substitute per victim; the attacked query subset is shared
          // because spec.seed is.
          for (size_t mi = 0; mi < config.models.size(); ++mi) {
            const std::string& model = config.models[mi];
            Eigen::VectorXd victim_scores;
            if (model == "pointwise") {
              victim_scores = train_X * models.pointwise;
            } else if (model == "drmrr") {
              victim_scores = PredictGtd(models.drmrr.weights, train_X).col(0);
            } else {
              victim_scores = PredictGtd(models.erm, train_X).col(0);
            }
            MlpConfig mlp;
            mlp.seed = Rng::DeriveSeed(spec.seed, 100 + mi);
            const SubstituteMlp substitute =
                TrainSubstituteMlp(train_X, victim_scores, mlp);
            const RankingDataset attacked =
                BlackboxFgsmAttack(test_ds, substitute, spec);
            timed_record(models, model, attacked.queries, attack_name, param,
                         nullptr);
          }
          break;
        }
        case AttackKind::kLabelPoison: {
          RankingDataset train_ds;
          train_ds.p = ds.p;
          train_ds.y_max = ds.y_max;
          for (const Query* q : train_q) train_ds.queries.push_back(*q);
          const RankingDataset poisoned = PoisonLabels(train_ds, spec.e,
                                                       spec.seed);
          std::vector<const Query*> poisoned_q;
          for (const Query& q : poisoned.queries) poisoned_q.push_back(&q);
          GtdParams poison_gtd = gtd;
          poison_gtd.y_max = std::max(gtd.y_max, 2);  // grades now span 0..2

          FoldModels poisoned_models;
          poisoned_models.has_drmrr = models.has_drmrr;
          poisoned_models.has_erm = models.has_erm;
          poisoned_models.has_pointwise = models.has_pointwise;
          if (models.has_drmrr) {
            poisoned_models.drmrr =
                TuneEpsilon(poisoned_q, val_q, ds.p, config.epsilon_grid,
                            poison_gtd, config.r, config.solver);
          }
          if (models.has_erm) {
            poisoned_models.erm =
                Fit(BuildGtdTrainingSet(poisoned_q, ds.p, poison_gtd), 0.0,
                    config.r, config.solver);
          }
          if (models.has_pointwise) {
            Eigen::MatrixXd px;
            Eigen::VectorXd py;
            BuildScalarTrainingSet(poisoned_q, ds.p, &px, &py);
            poisoned_models.pointwise = FitPointwiseLinear(px, py);
          }
          for (const std::string& model : config.models) {
            timed_record(poisoned_models, model, test_queries, attack_name,
                         param, nullptr);
          }
          break;
        }
      }
    }
  }
  return out;
}

void EmitReport(const CvOutputs& outputs, const ExperimentConfig& config,
                const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) {
    throw std::runtime_error("cannot create output directory " + out_dir +
                             ": " + ec.message());
  }
  const auto open_out = [&](const std::string& name) {
    std::ofstream f(fs::path(out_dir) / name);
    if (!f) {
      throw std::runtime_error("cannot write " +
                               (fs::path(out_dir) / name).string());
    }
    return f;
  };

  std::vector<RunRecord> records = outputs.records;
  std::sort(records.begin(), records.end(),
            [](const RunRecord& a, const RunRecord& b) {
              return std::tie(a.fold, a.model, a.attack, a.attack_param) <
                     std::tie(b.fold, b.model, b.attack, b.attack_param);
            });

  {
    nlohmann::json arr = nlohmann::json::array();
    arr.push_back({{"config", ConfigToJson(config)},
                   {"config_hash", ConfigHash(config)}});
    for (const RunRecord& r : records) arr.push_back(RecordToJson(r));
    open_out("records.json") << arr.dump(2) << '\n';
  }

  {
    // Per (model, attack, param, metric): mean and sample SD of the fold
    // means.
    std::map<std::tuple<std::string, std::string, double, std::string>,
             std::vector<double>>
        cells;
    for (const RunRecord& r : records) {
      for (const auto& [metric, value] : r.metrics.means) {
        cells[{r.model, r.attack, r.attack_param, metric}].push_back(value);
      }
    }
    std::ofstream csv = open_out("summary.csv");
    csv << "model,attack,attack_param,metric,mean,sd,folds\n";
    csv << std::setprecision(17);
    for (const auto& [key, values] : cells) {
      double mean = 0.0;
      for (double v : values) mean += v;
      mean /= values.size();
      double sd = 0.0;
      if (values.size() > 1) {
        for (double v : values) sd += (v - mean) * (v - mean);
        sd = std::sqrt(sd / (values.size() - 1));
      }
      csv << std::get<0>(key) << ',' << std::get<1>(key) << ','
          << std::get<2>(key) << ',' << std::get<3>(key) << ',' << mean << ','
          << sd << ',' << values.size() << '\n';
    }
  }

  for (const auto& [name, contents] : outputs.trec_runs) {
    open_out(name) << contents;
  }
}

}  // namespace drmrr
