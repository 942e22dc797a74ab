#ifndef DRMRR_DATASET_HPP_
#define DRMRR_DATASET_HPP_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace drmrr {

/*! \brief One query-document pair: dense feature vector plus graded label. */
struct Document {
  std::vector<double> features;
  int label = 0;
  std::string doc_id;
};

/*! \brief A query and its candidate documents in original file order. */
struct Query {
  std::string qid;
  std::vector<Document> documents;
};

/*!
 * \brief A ranking dataset in memory: queries, feature dimension, maximum
 * relevance grade, and (after SplitFolds) a qid -> fold assignment.
 *
 * Immutable by convention after construction; all transforms below return
 * fresh copies.
 */
struct RankingDataset {
  std::vector<Query> queries;
  int p = 0;
  int y_max = 0;
  std::map<std::string, int> folds;  // qid -> fold index in 1..num_folds
  int num_folds = 0;

  int NumQueries() const { return static_cast<int>(queries.size()); }
  int NumDocuments() const;
};

/*!
 * \brief Parses SVMLight-with-qid (LETOR) text: one document per line,
 * `<label> qid:<qid> <idx>:<val> ... [#comment]`.
 *
 * Feature indices are 1-based and may be sparse; missing indices fill with
 * 0.0 once the global dimension (max index seen) is known. Documents group
 * by qid in file order. Throws std::runtime_error with the offending line
 * number on malformed input, and on an empty stream.
 */
RankingDataset ParseLetor(std::istream& in);

/*! \brief Convenience overload reading from a file path. */
RankingDataset ParseLetorFile(const std::string& path);

/*!
 * \brief Writes the dataset back out in the same format: label, qid, then
 * features in ascending index order, doc_id as the trailing comment.
 * Feature values use shortest round-trip decimals.
 */
void SerializeLetor(const RankingDataset& dataset, std::ostream& out);

/*!
 * \brief Per-query, per-feature min-max scaling to [0,1]. A feature that is
 * constant within a query maps to 0.0.
 */
RankingDataset NormalizeFeatures(const RankingDataset& dataset);

/*!
 * \brief Assigns queries to `num_folds` folds, sizes differing by at most
 * one, deterministic in `seed`. Folds partition queries, never documents.
 * Throws if num_folds < 2 or num_folds > number of queries.
 */
RankingDataset SplitFolds(const RankingDataset& dataset, int num_folds,
                          uint64_t seed);

/*!
 * \brief Desk-scale synthetic ranking data. Features are uniform on
 * [0,1]^p; a hidden weight vector induces latent scores; labels are the
 * per-query quantile bins of latent-plus-noise in {0..y_max}.
 */
RankingDataset GenerateSynthetic(int n_queries, int docs_per_query, int p,
                                 int y_max, double noise_scale,
                                 uint64_t seed);

}  // namespace drmrr

#endif  // DRMRR_DATASET_HPP_
