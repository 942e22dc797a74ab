#include "drmrr/gtd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "drmrr/metrics.hpp"

namespace drmrr {

void GtdParams::Validate() const {
  if (K < 1) throw std::invalid_argument("K must be >= 1");
  if (alpha <= 0.0) throw std::invalid_argument("alpha must be positive");
  if (beta <= 0.0) throw std::invalid_argument("beta must be positive");
  if (log_base <= 1.0) throw std::invalid_argument("log_base must be > 1");
  if (y_max < 1) throw std::invalid_argument("y_max must be >= 1");
}

SortedQuery SortByRelevance(const Query& query, double log_base) {
  const int n = static_cast<int>(query.documents.size());
  if (n == 0) throw std::invalid_argument("empty query");

  SortedQuery sorted;
  sorted.order.resize(n);
  std::iota(sorted.order.begin(), sorted.order.end(), 0);
  std::stable_sort(sorted.order.begin(), sorted.order.end(),
                   [&](int a, int b) {
                     return query.documents[a].label >
                            query.documents[b].label;
                   });
  sorted.y_sorted.resize(n);
  sorted.pos_of.resize(n);
  sorted.idcg = 0.0;
  for (int r = 0; r < n; ++r) {
    const int d = sorted.order[r];
    sorted.y_sorted[r] = query.documents[d].label;
    sorted.pos_of[d] = r;
    sorted.idcg += sorted.y_sorted[r] * Discount(r + 1, log_base);
  }
  sorted.degenerate = sorted.idcg <= 0.0;
  return sorted;
}

std::vector<double> NdcgDeviationVector(const SortedQuery& sorted,
                                        int doc_index, double log_base) {
  const int n = sorted.Size();
  if (doc_index < 0 || doc_index >= n) {
    throw std::out_of_range("document index out of range");
  }
  if (sorted.degenerate) return std::vector<double>(n, 0.0);

  const int y_d = sorted.y_sorted[sorted.pos_of[doc_index]];
  const int pos_d = sorted.pos_of[doc_index] + 1;  // 1-based
  std::vector<double> scores(n);
  for (int i = 1; i <= n; ++i) {
    const int y_at_i = sorted.y_sorted[i - 1];
    scores[i - 1] = 1.0 + ((y_d - y_at_i) * Discount(i, log_base) +
                           (y_at_i - y_d) * Discount(pos_d, log_base)) /
                              sorted.idcg;
  }
  return scores;
}

std::vector<double> PositionDeviationVector(const SortedQuery& sorted,
                                            int doc_index,
                                            const GtdParams& params) {
  const int n = sorted.Size();
  if (doc_index < 0 || doc_index >= n) {
    throw std::out_of_range("document index out of range");
  }
  const int pos_d = sorted.pos_of[doc_index] + 1;  // 1-based
  std::vector<double> scores(n);
  for (int i = 1; i <= n; ++i) {
    const double h = pos_d - i;
    const double arg = std::min(params.beta * h, 0.5 * params.beta * h);
    scores[i - 1] = params.alpha / std::sqrt(std::abs(std::cosh(arg)));
  }
  return scores;
}

double ImportanceScore(int y_d, int y_max) {
  if (y_max < 1) throw std::invalid_argument("y_max must be >= 1");
  if (y_d < 0 || y_d > y_max) {
    throw std::invalid_argument("label outside 0..y_max");
  }
  return std::log(static_cast<double>(y_d) * y_max + 1.0) /
         std::log(static_cast<double>(y_max) * y_max + 1.0);
}

namespace {

// First K entries; repeats the last entry when the query is shorter than K.
std::vector<double> TruncateOrPad(const std::vector<double>& v, int k) {
  std::vector<double> out(k);
  const int n = static_cast<int>(v.size());
  for (int i = 0; i < k; ++i) out[i] = v[std::min(i, n - 1)];
  return out;
}

}  // namespace

std::vector<double> GtdVector(const SortedQuery& sorted, int doc_index,
                              const GtdParams& params) {
  params.Validate();
  if (sorted.degenerate) return std::vector<double>(params.K, 0.0);

  const double importance =
      ImportanceScore(sorted.y_sorted[sorted.pos_of[doc_index]], params.y_max);
  const auto ndcg_dev =
      TruncateOrPad(NdcgDeviationVector(sorted, doc_index, params.log_base),
                    params.K);
  const auto pos_dev =
      TruncateOrPad(PositionDeviationVector(sorted, doc_index, params),
                    params.K);
  std::vector<double> theta(params.K);
  for (int i = 0; i < params.K; ++i) {
    theta[i] = importance * pos_dev[i] * ndcg_dev[i];
  }
  return theta;
}

GtdMatrix BuildGtdMatrix(const Query& query, const GtdParams& params) {
  params.Validate();
  const SortedQuery sorted = SortByRelevance(query, params.log_base);
  GtdMatrix gtd;
  gtd.params = params;
  gtd.values.resize(sorted.Size(), params.K);
  for (int d = 0; d < sorted.Size(); ++d) {
    const auto theta = GtdVector(sorted, d, params);
    for (int i = 0; i < params.K; ++i) gtd.values(d, i) = theta[i];
  }
  return gtd;
}

void GtdMatrix::WriteCsv(std::ostream& out) const {
  for (Eigen::Index d = 0; d < values.rows(); ++d) {
    for (Eigen::Index i = 0; i < values.cols(); ++i) {
      if (i > 0) out << ',';
      out << values(d, i);
    }
    out << '\n';
  }
}

}  // namespace drmrr
