#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <set>
#include <vector>

#include "drmrr/random.hpp"
#include "drmrr/robustness.hpp"

using namespace drmrr;

namespace {

RankingDataset MakeDataset(int n_queries, int docs_per_query, int p,
                           uint64_t seed) {
  Rng rng(seed);
  RankingDataset ds;
  ds.p = p;
  ds.y_max = 2;
  for (int q = 0; q < n_queries; ++q) {
    Query query;
    query.qid = "q" + std::to_string(q + 1);
    for (int d = 0; d < docs_per_query; ++d) {
      Document doc;
      doc.doc_id = query.qid + "_d" + std::to_string(d + 1);
      doc.label = rng.UniformInt(3);
      doc.features.resize(p);
      for (int j = 0; j < p; ++j) doc.features[j] = rng.Uniform01();
      query.documents.push_back(std::move(doc));
    }
    ds.queries.push_back(std::move(query));
  }
  return ds;
}

bool QueriesIdentical(const Query& a, const Query& b) {
  if (a.documents.size() != b.documents.size()) return false;
  for (size_t d = 0; d < a.documents.size(); ++d) {
    if (a.documents[d].label != b.documents[d].label) return false;
    if (a.documents[d].features != b.documents[d].features) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("attack kind names round-trip") {
  for (AttackKind kind :
       {AttackKind::kGaussian, AttackKind::kUniversalFgsm,
        AttackKind::kBlackboxFgsm, AttackKind::kLabelPoison}) {
    CHECK(AttackKindFromString(AttackKindName(kind)) == kind);
  }
  CHECK_THROWS(AttackKindFromString("nope"));
}

TEST_CASE("attack spec validation") {
  AttackSpec ok;
  CHECK_NOTHROW(ok.Validate());
  AttackSpec bad = ok;
  bad.fraction = 1.5;
  CHECK_THROWS_AS(bad.Validate(), std::invalid_argument);
  bad = ok;
  bad.fraction = -0.1;
  CHECK_THROWS_AS(bad.Validate(), std::invalid_argument);
  bad = ok;
  bad.sigma = -1.0;
  CHECK_THROWS_AS(bad.Validate(), std::invalid_argument);
  bad = ok;
  bad.eta = -0.01;
  CHECK_THROWS_AS(bad.Validate(), std::invalid_argument);
  bad = ok;
  bad.e = 1.01;
  CHECK_THROWS_AS(bad.Validate(), std::invalid_argument);
}

TEST_CASE("attacked query selection") {
  const std::vector<int> chosen = SelectAttackedQueries(10, 0.75, 7);
  CHECK(chosen.size() == 8);  // ceil(7.5)
  CHECK(std::is_sorted(chosen.begin(), chosen.end()));
  CHECK(std::set<int>(chosen.begin(), chosen.end()).size() == chosen.size());
  for (int q : chosen) {
    CHECK(q >= 0);
    CHECK(q < 10);
  }
  CHECK(SelectAttackedQueries(10, 0.75, 7) == chosen);  // deterministic
  CHECK(SelectAttackedQueries(10, 0.0, 7).empty());
  CHECK(SelectAttackedQueries(4, 1.0, 7) == std::vector<int>{0, 1, 2, 3});
  CHECK(SelectAttackedQueries(4, 0.75, 7).size() == 3);
}

TEST_CASE("gaussian attack perturbs exactly the selected queries") {
  const RankingDataset clean = MakeDataset(10, 100, 100, 1);
  AttackSpec spec;
  spec.kind = AttackKind::kGaussian;
  spec.mu = 0.05;
  spec.sigma = 0.001;
  spec.seed = 99;
  const RankingDataset noisy = GaussianAttack(clean, spec);

  const std::vector<int> chosen = SelectAttackedQueries(10, 0.75, 99);
  const std::set<int> chosen_set(chosen.begin(), chosen.end());
  std::vector<double> deltas;
  for (int q = 0; q < 10; ++q) {
    if (!chosen_set.count(q)) {
      CHECK(QueriesIdentical(clean.queries[q], noisy.queries[q]));
      continue;
    }
    for (size_t d = 0; d < clean.queries[q].documents.size(); ++d) {
      CHECK(noisy.queries[q].documents[d].label ==
            clean.queries[q].documents[d].label);
      for (int j = 0; j < clean.p; ++j) {
        deltas.push_back(noisy.queries[q].documents[d].features[j] -
                         clean.queries[q].documents[d].features[j]);
      }
    }
  }
  REQUIRE(deltas.size() == 8u * 100u * 100u);
  double mean = 0.0;
  for (double v : deltas) mean += v;
  mean /= static_cast<double>(deltas.size());
  double var = 0.0;
  for (double v : deltas) var += (v - mean) * (v - mean);
  var /= static_cast<double>(deltas.size() - 1);
  CHECK(std::abs(mean - 0.05) <= 0.001);
  CHECK(std::abs(std::sqrt(var) - 0.001) <= 1e-4);
}

TEST_CASE("gaussian attack with zero noise is the identity") {
  const RankingDataset clean = MakeDataset(4, 5, 3, 2);
  AttackSpec spec;
  spec.mu = 0.0;
  spec.sigma = 0.0;
  const RankingDataset out = GaussianAttack(clean, spec);
  for (int q = 0; q < 4; ++q) {
    CHECK(QueriesIdentical(clean.queries[q], out.queries[q]));
  }

  AttackSpec none;
  none.fraction = 0.0;
  none.mu = 10.0;
  none.sigma = 5.0;
  const RankingDataset skipped = GaussianAttack(clean, none);
  for (int q = 0; q < 4; ++q) {
    CHECK(QueriesIdentical(clean.queries[q], skipped.queries[q]));
  }
}

TEST_CASE("fgsm perturbation hand fixture") {
  Eigen::VectorXd w(2);
  w << 1.0, -2.0;
  Eigen::VectorXd x(2);
  x << 0.5, 0.5;
  // w'x = -0.5, gradient 2(w'x - y) w = (-1, 2), signs (-1, +1).
  const auto grad = [&](const Eigen::VectorXd& xx, double yy) {
    return LinearSquaredErrorGradient(w, xx, yy);
  };
  const Eigen::VectorXd moved = FgsmPerturb(x, 0.0, grad, 0.1);
  CHECK(moved(0) == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(moved(1) == doctest::Approx(0.6).epsilon(1e-12));

  // eta = 0 leaves the point alone.
  CHECK(FgsmPerturb(x, 0.0, grad, 0.0) == x);

  // Zero residual: gradient vanishes, sgn(0) = 0.
  CHECK(FgsmPerturb(x, -0.5, grad, 0.1) == x);
}

TEST_CASE("universal fgsm moves components by exactly eta") {
  const RankingDataset clean = MakeDataset(6, 8, 5, 3);

  // Adversary trained on flattened clean data.
  const int total = 6 * 8;
  Eigen::MatrixXd X(total, 5);
  Eigen::VectorXd y(total);
  int row = 0;
  for (const Query& q : clean.queries) {
    for (const Document& d : q.documents) {
      for (int j = 0; j < 5; ++j) X(row, j) = d.features[j];
      y(row) = d.label;
      ++row;
    }
  }
  const Eigen::VectorXd w = TrainLinearAdversary(X, y);

  AttackSpec spec;
  spec.kind = AttackKind::kUniversalFgsm;
  spec.eta = 0.05;
  spec.seed = 5;
  const RankingDataset out = UniversalFgsmAttack(clean, w, spec);

  const std::vector<int> chosen = SelectAttackedQueries(6, 0.75, 5);
  const std::set<int> chosen_set(chosen.begin(), chosen.end());
  for (int q = 0; q < 6; ++q) {
    if (!chosen_set.count(q)) {
      CHECK(QueriesIdentical(clean.queries[q], out.queries[q]));
      continue;
    }
    for (size_t d = 0; d < clean.queries[q].documents.size(); ++d) {
      const Document& before = clean.queries[q].documents[d];
      const Document& after = out.queries[q].documents[d];
      CHECK(after.label == before.label);
      Eigen::VectorXd x(5);
      for (int j = 0; j < 5; ++j) x(j) = before.features[j];
      const Eigen::VectorXd g =
          LinearSquaredErrorGradient(w, x, before.label);
      for (int j = 0; j < 5; ++j) {
        const double sign = g(j) > 0.0 ? 1.0 : (g(j) < 0.0 ? -1.0 : 0.0);
        // Bitwise: the attack performs the same single add.
        CHECK(after.features[j] == before.features[j] + sign * spec.eta);
      }
    }
  }
}

TEST_CASE("substitute mlp imitates a linear victim") {
  Rng rng(11);
  const int n = 200, p = 5;
  Eigen::MatrixXd X(n, p);
  Eigen::VectorXd w_true(p);
  for (int j = 0; j < p; ++j) w_true(j) = rng.Uniform(-1.0, 1.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) X(i, j) = rng.Uniform01();
  }
  const Eigen::VectorXd scores = X * w_true;

  MlpConfig config;
  config.hidden = 16;
  config.max_epochs = 800;
  config.seed = 4;
  const SubstituteMlp mlp = TrainSubstituteMlp(X, scores, config);
  double mse = 0.0;
  for (int i = 0; i < n; ++i) {
    const double diff = mlp.Forward(X.row(i).transpose()) - scores(i);
    mse += diff * diff;
  }
  mse /= n;
  CHECK(mse < 1e-3);
}

TEST_CASE("substitute mlp on constant-zero scores") {
  Rng rng(12);
  Eigen::MatrixXd X(60, 3);
  for (int i = 0; i < X.size(); ++i) X(i / 3, i % 3) = rng.Uniform(-1.0, 1.0);
  MlpConfig config;
  config.hidden = 4;
  config.max_epochs = 20000;
  config.learning_rate = 0.2;
  config.tol = 1e-14;  // keep shrinking well past the default plateau
  config.seed = 9;
  const SubstituteMlp mlp =
      TrainSubstituteMlp(X, Eigen::VectorXd::Zero(60), config);
  double mse = 0.0;
  for (int i = 0; i < 60; ++i) {
    const double out = mlp.Forward(X.row(i).transpose());
    mse += out * out;
  }
  CHECK(mse / 60 < 1e-6);
}

TEST_CASE("substitute training is deterministic and can diverge") {
  Rng rng(13);
  Eigen::MatrixXd X(50, 4);
  Eigen::VectorXd y(50);
  for (int i = 0; i < 50; ++i) {
    for (int j = 0; j < 4; ++j) X(i, j) = rng.Uniform01();
    y(i) = rng.Uniform(-1.0, 1.0);
  }
  MlpConfig config;
  config.hidden = 8;
  config.max_epochs = 50;
  config.seed = 21;
  const SubstituteMlp a = TrainSubstituteMlp(X, y, config);
  const SubstituteMlp b = TrainSubstituteMlp(X, y, config);
  CHECK(a.W1 == b.W1);
  CHECK(a.w3 == b.w3);
  CHECK(a.b3 == b.b3);

  MlpConfig wild = config;
  wild.learning_rate = 1e6;
  CHECK_THROWS_AS(TrainSubstituteMlp(X, y, wild), std::runtime_error);
}

TEST_CASE("mlp input gradient matches finite differences") {
  Rng rng(14);
  Eigen::MatrixXd X(80, 4);
  Eigen::VectorXd y(80);
  for (int i = 0; i < 80; ++i) {
    for (int j = 0; j < 4; ++j) X(i, j) = rng.Uniform01();
    y(i) = rng.Uniform(0.0, 1.0);
  }
  MlpConfig config;
  config.hidden = 8;
  config.max_epochs = 100;
  config.seed = 2;
  const SubstituteMlp mlp = TrainSubstituteMlp(X, y, config);

  const double h = 1e-6;
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::VectorXd x(4);
    for (int j = 0; j < 4; ++j) x(j) = rng.Uniform01();
    const double target = rng.Uniform(0.0, 1.0);
    const Eigen::VectorXd g = MlpInputGradient(mlp, x, target);
    Eigen::VectorXd fd(4);
    for (int j = 0; j < 4; ++j) {
      Eigen::VectorXd up = x, down = x;
      up(j) += h;
      down(j) -= h;
      const double fu = mlp.Forward(up) - target;
      const double fl = mlp.Forward(down) - target;
      fd(j) = (fu * fu - fl * fl) / (2.0 * h);
    }
    CHECK((g - fd).norm() <= 1e-5 * std::max(1.0, fd.norm()));
  }
}

TEST_CASE("identity activation collapses to an affine adversary") {
  SubstituteMlp mlp;
  mlp.activation = "identity";
  mlp.W1.resize(2, 3);
  mlp.W1 << 1, 0, 2, 0, 1, -1;
  mlp.b1.setZero(2);
  mlp.W2.resize(2, 2);
  mlp.W2 << 2, 0, 0, 3;
  mlp.b2.setZero(2);
  mlp.w3.resize(2);
  mlp.w3 << 1, 1;
  mlp.b3 = 0.5;

  const Eigen::VectorXd w_eff =
      mlp.W1.transpose() * mlp.W2.transpose() * mlp.w3;
  Eigen::VectorXd x(3);
  x << 0.2, -0.4, 0.7;
  const double y = 0.3;
  CHECK(mlp.Forward(x) ==
        doctest::Approx(w_eff.dot(x) + 0.5).epsilon(1e-12));
  const Eigen::VectorXd g = MlpInputGradient(mlp, x, y);
  const Eigen::VectorXd want = 2.0 * (mlp.Forward(x) - y) * w_eff;
  CHECK((g - want).norm() <= 1e-12);
}

TEST_CASE("blackbox fgsm perturbs the shared query subset") {
  const RankingDataset clean = MakeDataset(6, 4, 3, 17);
  SubstituteMlp mlp;
  mlp.activation = "identity";
  mlp.W1 = Eigen::MatrixXd::Identity(3, 3);
  mlp.b1.setZero(3);
  mlp.W2 = Eigen::MatrixXd::Identity(3, 3);
  mlp.b2.setZero(3);
  mlp.w3.resize(3);
  mlp.w3 << 1.0, -1.0, 0.5;
  mlp.b3 = 0.0;

  AttackSpec spec;
  spec.kind = AttackKind::kBlackboxFgsm;
  spec.eta = 0.02;
  spec.seed = 31;
  const RankingDataset out = BlackboxFgsmAttack(clean, mlp, spec);

  const std::vector<int> chosen = SelectAttackedQueries(6, 0.75, 31);
  const std::set<int> chosen_set(chosen.begin(), chosen.end());
  for (int q = 0; q < 6; ++q) {
    if (!chosen_set.count(q)) {
      CHECK(QueriesIdentical(clean.queries[q], out.queries[q]));
      continue;
    }
    for (size_t d = 0; d < clean.queries[q].documents.size(); ++d) {
      const Document& before = clean.queries[q].documents[d];
      const Document& after = out.queries[q].documents[d];
      CHECK(after.label == before.label);
      for (int j = 0; j < 3; ++j) {
        const double v = after.features[j];
        const double base = before.features[j];
        const bool step = v == base + spec.eta || v == base - spec.eta ||
                          v == base;
        CHECK(step);
      }
    }
  }
}

TEST_CASE("poison transition table") {
  for (double e : {0.0, 0.3, 0.85, 1.0}) {
    const auto table = PoisonTransitionTable(e);
    for (int row = 0; row < 3; ++row) {
      double sum = 0.0;
      for (int col = 0; col < 3; ++col) {
        CHECK(table[row][col] >= 0.0);
        sum += table[row][col];
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(table[row][row] == e);
    }
  }
  const auto t = PoisonTransitionTable(0.85);
  CHECK(t[0][1] == doctest::Approx(2.0 / 3.0 * 0.15).epsilon(1e-12));
  CHECK(t[0][2] == doctest::Approx(1.0 / 3.0 * 0.15).epsilon(1e-12));
  CHECK(t[1][0] == doctest::Approx(0.5 * 0.15).epsilon(1e-12));
  CHECK(t[1][2] == doctest::Approx(0.5 * 0.15).epsilon(1e-12));
  CHECK(t[2][0] == doctest::Approx(1.0 / 3.0 * 0.15).epsilon(1e-12));
  CHECK(t[2][1] == doctest::Approx(2.0 / 3.0 * 0.15).epsilon(1e-12));
  CHECK_THROWS(PoisonTransitionTable(-0.1));
  CHECK_THROWS(PoisonTransitionTable(1.1));
}

TEST_CASE("label poisoning") {
  RankingDataset ds;
  ds.p = 1;
  ds.y_max = 2;
  // One query per grade, 30000 documents each.
  for (int grade = 0; grade < 3; ++grade) {
    Query q;
    q.qid = "g" + std::to_string(grade);
    for (int d = 0; d < 30000; ++d) {
      Document doc;
      doc.doc_id = "d";
      doc.label = grade;
      doc.features = {0.5};
      q.documents.push_back(std::move(doc));
    }
    ds.queries.push_back(std::move(q));
  }

  // Retention 1 keeps everything.
  const RankingDataset kept = PoisonLabels(ds, 1.0, 3);
  for (int g = 0; g < 3; ++g) {
    for (const Document& doc : kept.queries[g].documents) {
      CHECK(doc.label == g);
    }
  }

  // Monte-Carlo frequencies track the table.
  const double e = 0.7;
  const auto table = PoisonTransitionTable(e);
  const RankingDataset poisoned = PoisonLabels(ds, e, 3);
  for (int g = 0; g < 3; ++g) {
    std::array<double, 3> freq = {0.0, 0.0, 0.0};
    for (const Document& doc : poisoned.queries[g].documents) {
      REQUIRE(doc.label >= 0);
      REQUIRE(doc.label <= 2);
      freq[doc.label] += 1.0;
    }
    for (int to = 0; to < 3; ++to) {
      CHECK(std::abs(freq[to] / 30000.0 - table[g][to]) <= 0.02);
    }
  }

  // Deterministic in the seed.
  const RankingDataset again = PoisonLabels(ds, e, 3);
  for (int g = 0; g < 3; ++g) {
    for (size_t d = 0; d < again.queries[g].documents.size(); ++d) {
      CHECK(again.queries[g].documents[d].label ==
            poisoned.queries[g].documents[d].label);
    }
  }

  // Features and everything else stay put.
  CHECK(poisoned.queries[0].documents[0].features ==
        std::vector<double>{0.5});

  RankingDataset bad = MakeDataset(1, 1, 1, 0);
  bad.queries[0].documents[0].label = 3;
  CHECK_THROWS(PoisonLabels(bad, 0.9, 1));
}
