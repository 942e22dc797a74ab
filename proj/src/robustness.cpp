#include "drmrr/robustness.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "drmrr/random.hpp"
#include "drmrr/ranker.hpp"

namespace drmrr {

std::string AttackKindName(AttackKind kind) {
  switch (kind) {
    case AttackKind::kGaussian:
      return "gaussian";
    case AttackKind::kUniversalFgsm:
      return "universal_fgsm";
    case AttackKind::kBlackboxFgsm:
      return "blackbox_fgsm";
    case AttackKind::kLabelPoison:
      return "label_poison";
  }
  throw std::logic_error("bad attack kind");
}

AttackKind AttackKindFromString(const std::string& name) {
  if (name == "gaussian") return AttackKind::kGaussian;
  if (name == "universal_fgsm") return AttackKind::kUniversalFgsm;
  if (name == "blackbox_fgsm") return AttackKind::kBlackboxFgsm;
  if (name == "label_poison") return AttackKind::kLabelPoison;
  throw std::invalid_argument("unknown attack kind: " + name);
}

void AttackSpec::Validate() const {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw std::invalid_argument("attack fraction must be in [0,1]");
  }
  if (!(sigma >= 0.0)) throw std::invalid_argument("sigma must be >= 0");
  if (!(eta >= 0.0)) throw std::invalid_argument("eta must be >= 0");
  if (!(e >= 0.0 && e <= 1.0)) {
    throw std::invalid_argument("label-retention e must be in [0,1]");
  }
}

std::vector<int> SelectAttackedQueries(int num_queries, double fraction,
                                       uint64_t seed) {
  const int m = static_cast<int>(
      std::ceil(fraction * static_cast<double>(num_queries)));
  std::vector<int> indices(num_queries);
  std::iota(indices.begin(), indices.end(), 0);
  Rng rng(Rng::DeriveSeed(seed, 0));
  rng.Shuffle(&indices);
  indices.resize(std::min(m, num_queries));
  std::sort(indices.begin(), indices.end());
  return indices;
}

namespace {

void CheckKind(const AttackSpec& spec, AttackKind expected) {
  spec.Validate();
  if (spec.kind != expected) {
    throw std::invalid_argument("attack spec kind is " +
                                AttackKindName(spec.kind) + ", expected " +
                                AttackKindName(expected));
  }
}

// FGSM over each document of the selected queries with the given per-point
// cost gradient; labels and unselected queries pass through unchanged.
RankingDataset FgsmAttackDataset(
    const RankingDataset& test, const AttackSpec& spec,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&, double)>&
        gradient_fn) {
  RankingDataset out = test;
  for (int qi : SelectAttackedQueries(test.NumQueries(), spec.fraction,
                                      spec.seed)) {
    for (Document& doc : out.queries[qi].documents) {
      const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(
          doc.features.data(), static_cast<Eigen::Index>(doc.features.size()));
      const Eigen::VectorXd perturbed =
          FgsmPerturb(x, static_cast<double>(doc.label), gradient_fn, spec.eta);
      for (size_t f = 0; f < doc.features.size(); ++f) {
        doc.features[f] = perturbed(static_cast<Eigen::Index>(f));
      }
    }
  }
  return out;
}

}  // namespace

RankingDataset GaussianAttack(const RankingDataset& test,
                              const AttackSpec& spec) {
  CheckKind(spec, AttackKind::kGaussian);
  RankingDataset out = test;
  for (int qi : SelectAttackedQueries(test.NumQueries(), spec.fraction,
                                      spec.seed)) {
    Rng rng(Rng::DeriveSeed(spec.seed, 1 + static_cast<uint64_t>(qi)));
    for (Document& doc : out.queries[qi].documents) {
      for (double& value : doc.features) {
        value += spec.mu + spec.sigma * rng.Gaussian();
      }
    }
  }
  return out;
}

Eigen::VectorXd TrainLinearAdversary(const Eigen::MatrixXd& X,
                                     const Eigen::VectorXd& y) {
  return FitPointwiseLinear(X, y);
}

Eigen::VectorXd LinearSquaredErrorGradient(const Eigen::VectorXd& w,
                                           const Eigen::VectorXd& x,
                                           double y) {
  return 2.0 * (w.dot(x) - y) * w;
}

Eigen::VectorXd FgsmPerturb(
    const Eigen::VectorXd& x, double y,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&, double)>&
        gradient_fn,
    double eta) {
  const Eigen::VectorXd g = gradient_fn(x, y);
  if (g.size() != x.size()) {
    throw std::invalid_argument("gradient dimension mismatch");
  }
  Eigen::VectorXd out = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (g(j) > 0.0) {
      out(j) += eta;
    } else if (g(j) < 0.0) {
      out(j) -= eta;
    }
  }
  return out;
}

RankingDataset UniversalFgsmAttack(const RankingDataset& test,
                                   const Eigen::VectorXd& adversary_w,
                                   const AttackSpec& spec) {
  CheckKind(spec, AttackKind::kUniversalFgsm);
  return FgsmAttackDataset(
      test, spec, [&adversary_w](const Eigen::VectorXd& x, double y) {
        return LinearSquaredErrorGradient(adversary_w, x, y);
      });
}

namespace {

double Activate(double z, bool identity) {
  return identity ? z : std::tanh(z);
}

// Derivative expressed through the activation value a = act(z).
double ActivatePrime(double a, bool identity) {
  return identity ? 1.0 : 1.0 - a * a;
}

struct ForwardPass {
  Eigen::VectorXd a1;
  Eigen::VectorXd a2;
  double out = 0.0;
};

ForwardPass RunForward(const SubstituteMlp& m, const Eigen::VectorXd& x,
                       bool identity) {
  ForwardPass fp;
  fp.a1 = (m.W1 * x + m.b1).unaryExpr(
      [identity](double z) { return Activate(z, identity); });
  fp.a2 = (m.W2 * fp.a1 + m.b2).unaryExpr(
      [identity](double z) { return Activate(z, identity); });
  fp.out = m.w3.dot(fp.a2) + m.b3;
  return fp;
}

bool IsIdentityActivation(const std::string& tag) {
  if (tag == "identity") return true;
  if (tag == "tanh") return false;
  throw std::invalid_argument("unknown activation: " + tag);
}

}  // namespace

double SubstituteMlp::Forward(const Eigen::VectorXd& x) const {
  if (x.size() != W1.cols()) {
    throw std::invalid_argument("substitute input dimension mismatch");
  }
  return RunForward(*this, x, IsIdentityActivation(activation)).out;
}

SubstituteMlp TrainSubstituteMlp(const Eigen::MatrixXd& X,
                                 const Eigen::VectorXd& victim_scores,
                                 const MlpConfig& config) {
  const int n = static_cast<int>(X.rows());
  const int p = static_cast<int>(X.cols());
  if (n == 0) throw std::invalid_argument("empty substitute training set");
  if (victim_scores.size() != n) {
    throw std::invalid_argument("victim score count mismatch");
  }
  const int h = config.hidden;
  const bool identity = IsIdentityActivation(config.activation);

  SubstituteMlp m;
  m.activation = config.activation;
  Rng init_rng(Rng::DeriveSeed(config.seed, 0));
  const auto xavier = [&](Eigen::MatrixXd& W, int fan_in, int fan_out) {
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (Eigen::Index i = 0; i < W.rows(); ++i) {
      for (Eigen::Index j = 0; j < W.cols(); ++j) {
        W(i, j) = init_rng.Uniform(-limit, limit);
      }
    }
  };
  m.W1.resize(h, p);
  xavier(m.W1, p, h);
  m.b1 = Eigen::VectorXd::Zero(h);
  m.W2.resize(h, h);
  xavier(m.W2, h, h);
  m.b2 = Eigen::VectorXd::Zero(h);
  Eigen::MatrixXd w3_mat(h, 1);
  xavier(w3_mat, h, 1);
  m.w3 = w3_mat.col(0);
  m.b3 = 0.0;

  const auto training_mse = [&]() {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      const double d =
          RunForward(m, X.row(i).transpose(), identity).out - victim_scores(i);
      total += d * d;
    }
    return total / n;
  };

  Rng batch_rng(Rng::DeriveSeed(config.seed, 1));
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);

  SubstituteMlp best = m;
  double best_mse = training_mse();
  double window_best = best_mse;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    batch_rng.Shuffle(&order);
    for (int start = 0; start < n; start += config.batch_size) {
      const int stop = std::min(n, start + config.batch_size);
      Eigen::MatrixXd gW1 = Eigen::MatrixXd::Zero(h, p);
      Eigen::VectorXd gb1 = Eigen::VectorXd::Zero(h);
      Eigen::MatrixXd gW2 = Eigen::MatrixXd::Zero(h, h);
      Eigen::VectorXd gb2 = Eigen::VectorXd::Zero(h);
      Eigen::VectorXd gw3 = Eigen::VectorXd::Zero(h);
      double gb3 = 0.0;
      for (int b = start; b < stop; ++b) {
        const Eigen::VectorXd x = X.row(order[b]).transpose();
        const ForwardPass fp = RunForward(m, x, identity);
        const double g = 2.0 * (fp.out - victim_scores(order[b]));
        gw3 += g * fp.a2;
        gb3 += g;
        const Eigen::VectorXd d2 =
            (m.w3 * g).cwiseProduct(fp.a2.unaryExpr([identity](double a) {
              return ActivatePrime(a, identity);
            }));
        gW2 += d2 * fp.a1.transpose();
        gb2 += d2;
        const Eigen::VectorXd d1 =
            (m.W2.transpose() * d2)
                .cwiseProduct(fp.a1.unaryExpr([identity](double a) {
                  return ActivatePrime(a, identity);
                }));
        gW1 += d1 * x.transpose();
        gb1 += d1;
      }
      const double scale = config.learning_rate / (stop - start);
      m.W1 -= scale * gW1;
      m.b1 -= scale * gb1;
      m.W2 -= scale * gW2;
      m.b2 -= scale * gb2;
      m.w3 -= scale * gw3;
      m.b3 -= scale * gb3;
    }
    const double mse = training_mse();
    if (!std::isfinite(mse)) {
      throw std::runtime_error(
          "substitute training diverged (non-finite loss); reduce "
          "learning_rate");
    }
    if (mse < best_mse) {
      best_mse = mse;
      best = m;
    }
    if (epoch % config.stall_window == 0) {
      if (window_best - best_mse < config.tol * std::max(1.0, window_best)) {
        break;
      }
      window_best = best_mse;
    }
  }
  return best;
}

Eigen::VectorXd MlpInputGradient(const SubstituteMlp& model,
                                 const Eigen::VectorXd& x, double y) {
  if (x.size() != model.W1.cols()) {
    throw std::invalid_argument("substitute input dimension mismatch");
  }
  const bool identity = IsIdentityActivation(model.activation);
  const ForwardPass fp = RunForward(model, x, identity);
  const double g = 2.0 * (fp.out - y);
  const Eigen::VectorXd d2 =
      (model.w3 * g).cwiseProduct(fp.a2.unaryExpr([identity](double a) {
        return ActivatePrime(a, identity);
      }));
  const Eigen::VectorXd d1 =
      (model.W2.transpose() * d2)
          .cwiseProduct(fp.a1.unaryExpr([identity](double a) {
            return ActivatePrime(a, identity);
          }));
  return model.W1.transpose() * d1;
}

RankingDataset BlackboxFgsmAttack(const RankingDataset& test,
                                  const SubstituteMlp& substitute,
                                  const AttackSpec& spec) {
  CheckKind(spec, AttackKind::kBlackboxFgsm);
  return FgsmAttackDataset(
      test, spec, [&substitute](const Eigen::VectorXd& x, double y) {
        return MlpInputGradient(substitute, x, y);
      });
}

std::array<std::array<double, 3>, 3> PoisonTransitionTable(double e) {
  if (!(e >= 0.0 && e <= 1.0)) {
    throw std::invalid_argument("label-retention e must be in [0,1]");
  }
  const std::array<std::array<double, 3>, 3> table = {{
      {e, 2.0 / 3.0 * (1.0 - e), 1.0 / 3.0 * (1.0 - e)},
      {0.5 * (1.0 - e), e, 0.5 * (1.0 - e)},
      {1.0 / 3.0 * (1.0 - e), 2.0 / 3.0 * (1.0 - e), e},
  }};
  for (const auto& row : table) {
    const double sum = row[0] + row[1] + row[2];
    if (std::abs(sum - 1.0) > 1e-12) {
      throw std::logic_error("poison transition row does not sum to 1");
    }
  }
  return table;
}

RankingDataset PoisonLabels(const RankingDataset& train, double e,
                            uint64_t seed) {
  const auto table = PoisonTransitionTable(e);
  RankingDataset out = train;
  for (size_t qi = 0; qi < out.queries.size(); ++qi) {
    Rng rng(Rng::DeriveSeed(seed, static_cast<uint64_t>(qi)));
    for (Document& doc : out.queries[qi].documents) {
      if (doc.label < 0 || doc.label > 2) {
        throw std::invalid_argument(
            "label poisoning needs grades in {0,1,2}; query " +
            out.queries[qi].qid + " document " + doc.doc_id + " has grade " +
            std::to_string(doc.label));
      }
      const auto& row = table[static_cast<size_t>(doc.label)];
      const double u = rng.Uniform01();
      if (u < row[0]) {
        doc.label = 0;
      } else if (u < row[0] + row[1]) {
        doc.label = 1;
      } else {
        doc.label = 2;
      }
    }
  }
  return out;
}

}  // namespace drmrr
