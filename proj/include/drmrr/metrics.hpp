#ifndef DRMRR_METRICS_HPP_
#define DRMRR_METRICS_HPP_

#include <cmath>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace drmrr {

/*! \brief log_base(x). Shared by the deviation targets and the metrics so
 * both sides discount identically. */
inline double LogBase(double x, double base) {
  return std::log(x) / std::log(base);
}

/*! \brief Position discount 1/log_base(1 + rank), rank 1-based. */
inline double Discount(int rank, double log_base) {
  return 1.0 / LogBase(1.0 + rank, log_base);
}

/*!
 * \brief DCG over the top min(k, n) positions with gain G(s) = s and
 * discount 1/log_base(1+r); positions past k contribute nothing.
 */
double DcgAtK(const std::vector<int>& labels_in_rank_order, int k,
              double log_base);

/*!
 * \brief DCG@k normalized by the ideal DCG@k of `ideal_labels` (the
 * query's label multiset). Zero ideal DCG scores 0.
 */
double NdcgAtK(const std::vector<int>& labels_in_rank_order,
               const std::vector<int>& ideal_labels, int k, double log_base);

/*! \brief Fraction of relevant (grade >= 1) among the top min(k, n)
 * positions, divided by k. */
double PrecisionAtK(const std::vector<int>& labels_in_rank_order, int k);

/*!
 * \brief Average precision over the top k: mean of P@j at the relevant
 * positions j <= k, with m = number of relevant in the top k. m = 0
 * scores 0.
 */
double ApAtK(const std::vector<int>& labels_in_rank_order, int k);

/*! \brief Per-query metric values keyed like "ndcg@5", plus their
 * arithmetic means, for one fold's test queries. */
struct MetricsReport {
  std::map<std::string, std::map<std::string, double>> per_query;
  std::map<std::string, double> means;
  int fold = 0;

  /*! \brief Recomputes `means` from `per_query` (equal weight per query). */
  void ComputeMeans();

  void WriteCsv(std::ostream& out) const;
};

/*! \brief Arithmetic mean of one metric across reports' per-query values,
 * equal weight per query (pooled). */
double MeanMetric(const std::vector<MetricsReport>& reports,
                  const std::string& metric);

}  // namespace drmrr

#endif  // DRMRR_METRICS_HPP_
