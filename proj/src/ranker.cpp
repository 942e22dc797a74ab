#include "drmrr/ranker.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace drmrr {

Ranking RankFromGtd(const Eigen::MatrixXd& theta_hat) {
  const int n = static_cast<int>(theta_hat.rows());
  const int k = static_cast<int>(theta_hat.cols());
  if (n == 0 || k == 0) throw std::invalid_argument("empty GTD matrix");
  if (!theta_hat.allFinite()) {
    throw std::invalid_argument("non-finite GTD matrix");
  }

  Ranking ranking;
  ranking.source = "drmrr";
  ranking.order.reserve(n);
  std::vector<char> taken(n, 0);
  int cursor = 1;  // 1-based column cycling 1..K
  for (int j = 1; j <= n; ++j) {
    int best = -1;
    for (int i = 0; i < n; ++i) {
      if (taken[i]) continue;
      if (best < 0 || theta_hat(i, cursor - 1) > theta_hat(best, cursor - 1)) {
        best = i;
      }
    }
    taken[best] = 1;
    ranking.order.push_back(best);
    cursor = (j % k == 0) ? 1 : cursor + 1;
  }
  return ranking;
}

Eigen::VectorXd FitPointwiseLinear(const Eigen::MatrixXd& X,
                                   const Eigen::VectorXd& y) {
  if (X.rows() != y.size()) {
    throw std::invalid_argument("feature/label row counts differ");
  }
  const Eigen::Index p = X.cols();
  const Eigen::MatrixXd gram =
      X.transpose() * X + 1e-8 * Eigen::MatrixXd::Identity(p, p);
  return gram.ldlt().solve(X.transpose() * y);
}

Ranking RankPointwise(const Eigen::VectorXd& w, const Eigen::MatrixXd& X_test) {
  if (X_test.cols() != w.size()) {
    throw std::invalid_argument("feature dimension mismatch");
  }
  const Eigen::VectorXd scores = X_test * w;
  Ranking ranking;
  ranking.source = "pointwise";
  ranking.order.resize(scores.size());
  std::iota(ranking.order.begin(), ranking.order.end(), 0);
  std::stable_sort(ranking.order.begin(), ranking.order.end(),
                   [&](int a, int b) { return scores(a) > scores(b); });
  return ranking;
}

void WriteTrecRun(std::ostream& out, const std::string& qid,
                  const std::vector<std::string>& doc_ids,
                  const Ranking& ranking, const Eigen::VectorXd& scores,
                  const std::string& tag) {
  if (doc_ids.size() != ranking.order.size() ||
      scores.size() != static_cast<Eigen::Index>(ranking.order.size())) {
    throw std::invalid_argument("ranking/doc_id/score size mismatch");
  }
  for (size_t rank = 0; rank < ranking.order.size(); ++rank) {
    const int doc = ranking.order[rank];
    out << qid << " Q0 " << doc_ids[doc] << ' ' << rank + 1 << ' '
        << scores(doc) << ' ' << tag << '\n';
  }
}

}  // namespace drmrr
