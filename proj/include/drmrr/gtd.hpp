#ifndef DRMRR_GTD_HPP_
#define DRMRR_GTD_HPP_

#include <Eigen/Core>
#include <iosfwd>
#include <vector>

#include "drmrr/dataset.hpp"

namespace drmrr {

/*!
 * \brief Parameters of the ground-truth-deviation targets.
 *
 * K importance levels are kept per document; alpha caps the position
 * deviation score, beta sets how fast it decays, and log_base feeds every
 * gain/discount logarithm (shared with the metrics).
 */
struct GtdParams {
  int K = 3;
  double alpha = 10.0;
  double beta = 2.0;
  double log_base = 2.0;
  int y_max = 2;

  void Validate() const;
};

/*!
 * \brief A query's documents sorted by descending relevance, with the
 * permutation in both directions and the ideal DCG.
 *
 * Positions are 0-based in `order`/`pos_of`; the deviation formulas use
 * 1-based ranks internally. A query whose labels are all zero has idcg 0
 * and is flagged degenerate.
 */
struct SortedQuery {
  std::vector<int> order;     // sorted position -> original document index
  std::vector<int> y_sorted;  // labels in descending order
  std::vector<int> pos_of;    // original document index -> sorted position
  double idcg = 0.0;
  bool degenerate = false;

  int Size() const { return static_cast<int>(order.size()); }
};

/*! \brief Per-query GTD targets: row d is the K-vector for document d in
 * original order. */
struct GtdMatrix {
  Eigen::MatrixXd values;  // n_q x K
  GtdParams params;

  void WriteCsv(std::ostream& out) const;
};

/*!
 * \brief Stable descending sort by label (ties keep original order) plus
 * the ideal DCG at the configured log base.
 */
SortedQuery SortByRelevance(const Query& query, double log_base);

/*!
 * \brief NDCG deviation scores: entry i (0-based) is the NDCG of the
 * ideally sorted list after swapping document `doc_index` with the
 * document at position i+1. Equals 1 at the document's own position.
 * All-zero-label queries return all zeros.
 */
std::vector<double> NdcgDeviationVector(const SortedQuery& sorted,
                                        int doc_index, double log_base);

/*!
 * \brief Position deviation scores alpha / sqrt(cosh(min(beta*h,
 * beta/2*h))) with h = ideal position minus target position; maximal
 * (= alpha) at h = 0, and gentler for h > 0 than h < 0 so documents
 * placed above their slot are tolerated more.
 */
std::vector<double> PositionDeviationVector(const SortedQuery& sorted,
                                            int doc_index,
                                            const GtdParams& params);

/*!
 * \brief Importance weight log(y*y_max + 1)/log(y_max^2 + 1): zero for
 * irrelevant documents, one at the maximum grade, strictly increasing.
 */
double ImportanceScore(int y_d, int y_max);

/*!
 * \brief The K-vector target: importance-scaled Hadamard product of the
 * position and NDCG deviation scores, truncated to the first K entries.
 * When the query is shorter than K the last entries repeat.
 */
std::vector<double> GtdVector(const SortedQuery& sorted, int doc_index,
                              const GtdParams& params);

/*! \brief Row-wise GtdVector over all documents of a query. */
GtdMatrix BuildGtdMatrix(const Query& query, const GtdParams& params);

}  // namespace drmrr

#endif  // DRMRR_GTD_HPP_
