#ifndef DRMRR_RANKER_HPP_
#define DRMRR_RANKER_HPP_

#include <Eigen/Core>
#include <ostream>
#include <string>
#include <vector>

namespace drmrr {

/*! \brief A predicted ordering of one query's documents, best first.
 *
 * `order` holds 0-based indices into the query's document list.
 */
struct Ranking {
  std::vector<int> order;
  std::string source;  // "drmrr", "pointwise", or "external"
};

/*!
 * \brief Ranks documents from a predicted GTD matrix (n_t x K).
 *
 * Iterates j = 1..n_t with a column cursor that starts at column 1: the
 * remaining row with the largest entry in the cursor column takes rank j.
 * After each assignment the cursor resets to 1 when j mod K == 0 and
 * increments otherwise, so it cycles 1..K. Ties break toward the lowest
 * original row index. Throws on an empty or non-finite matrix.
 */
Ranking RankFromGtd(const Eigen::MatrixXd& theta_hat);

/*! \brief Least-squares weights for scalar targets via normal equations
 * with 1e-8 ridge jitter (always solvable, even rank-deficient). */
Eigen::VectorXd FitPointwiseLinear(const Eigen::MatrixXd& X,
                                   const Eigen::VectorXd& y);

/*! \brief Descending sort by w'x; equal scores keep their original order. */
Ranking RankPointwise(const Eigen::VectorXd& w, const Eigen::MatrixXd& X_test);

/*!
 * \brief Appends TREC run lines "<qid> Q0 <doc_id> <rank> <score> <tag>"
 * for one query. `scores` is indexed by original document position.
 */
void WriteTrecRun(std::ostream& out, const std::string& qid,
                  const std::vector<std::string>& doc_ids,
                  const Ranking& ranking, const Eigen::VectorXd& scores,
                  const std::string& tag);

}  // namespace drmrr

#endif  // DRMRR_RANKER_HPP_
