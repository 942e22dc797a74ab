#include "drmrr/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "drmrr/random.hpp"

namespace drmrr {

int RankingDataset::NumDocuments() const {
  int n = 0;
  for (const auto& q : queries) n += static_cast<int>(q.documents.size());
  return n;
}

namespace {

[[noreturn]] void ParseFail(int line_number, const std::string& what) {
  throw std::runtime_error("letor parse error at line " +
                           std::to_string(line_number) + ": " + what);
}

bool ParseInt(const std::string& tok, int* out) {
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto res = std::from_chars(first, last, *out);
  return res.ec == std::errc() && res.ptr == last;
}

bool ParseDouble(const std::string& tok, double* out) {
  if (tok.empty()) return false;
  char* end = nullptr;
  *out = std::strtod(tok.c_str(), &end);
  return end == tok.c_str() + tok.size();
}

std::string FormatDouble(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

RankingDataset ParseLetor(std::istream& in) {
  struct RawDoc {
    int label;
    std::vector<std::pair<int, double>> entries;  // 1-based sparse indices
    std::string doc_id;
  };
  std::vector<std::string> qid_order;
  std::unordered_map<std::string, std::vector<RawDoc>> by_qid;
  int max_index = 0;
  int max_label = 0;
  int line_number = 0;
  int n_docs = 0;

  std::string line;
  while (std::getline(in, line)) {
    ++line_number;
    std::string comment;
    const auto hash = line.find('#');
    if (hash != std::string::npos) {
      comment = line.substr(hash + 1);
      line.erase(hash);
    }
    std::istringstream tokens(line);
    std::string tok;
    if (!(tokens >> tok)) continue;  // blank line

    RawDoc doc;
    if (!ParseInt(tok, &doc.label)) {
      ParseFail(line_number, "non-integer label '" + tok + "'");
    }
    if (doc.label < 0) ParseFail(line_number, "negative label");

    if (!(tokens >> tok) || tok.rfind("qid:", 0) != 0 || tok.size() == 4) {
      ParseFail(line_number, "expected qid:<id> after label");
    }
    const std::string qid = tok.substr(4);

    while (tokens >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos) {
        ParseFail(line_number, "expected <idx>:<val>, got '" + tok + "'");
      }
      int idx = 0;
      double val = 0.0;
      if (!ParseInt(tok.substr(0, colon), &idx) || idx < 1) {
        ParseFail(line_number, "bad feature index in '" + tok + "'");
      }
      if (!ParseDouble(tok.substr(colon + 1), &val)) {
        ParseFail(line_number, "bad feature value in '" + tok + "'");
      }
      doc.entries.emplace_back(idx, val);
      max_index = std::max(max_index, idx);
    }

    // doc_id from the comment: LETOR writes "docid = XXX ...", plain
    // exports just carry an opaque token.
    {
      std::istringstream ct(comment);
      std::string a, b, c;
      if (ct >> a) {
        if (a == "docid" && ct >> b && b == "=" && ct >> c) {
          doc.doc_id = c;
        } else {
          doc.doc_id = a;
        }
      }
    }
    if (doc.doc_id.empty()) doc.doc_id = "d" + std::to_string(n_docs + 1);

    max_label = std::max(max_label, doc.label);
    auto it = by_qid.find(qid);
    if (it == by_qid.end()) {
      qid_order.push_back(qid);
      it = by_qid.emplace(qid, std::vector<RawDoc>()).first;
    }
    it->second.push_back(std::move(doc));
    ++n_docs;
  }
  if (n_docs == 0) {
    throw std::runtime_error("letor parse error: empty stream");
  }

  RankingDataset dataset;
  dataset.p = max_index;
  dataset.y_max = max_label;
  dataset.queries.reserve(qid_order.size());
  for (const auto& qid : qid_order) {
    Query query;
    query.qid = qid;
    for (auto& raw : by_qid[qid]) {
      Document doc;
      doc.label = raw.label;
      doc.doc_id = std::move(raw.doc_id);
      doc.features.assign(max_index, 0.0);
      for (const auto& [idx, val] : raw.entries) {
        doc.features[idx - 1] = val;
      }
      query.documents.push_back(std::move(doc));
    }
    dataset.queries.push_back(std::move(query));
  }
  return dataset;
}

RankingDataset ParseLetorFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);
  return ParseLetor(in);
}

void SerializeLetor(const RankingDataset& dataset, std::ostream& out) {
  for (const auto& query : dataset.queries) {
    for (const auto& doc : query.documents) {
      out << doc.label << " qid:" << query.qid;
      for (size_t j = 0; j < doc.features.size(); ++j) {
        out << ' ' << (j + 1) << ':' << FormatDouble(doc.features[j]);
      }
      if (!doc.doc_id.empty()) out << " # " << doc.doc_id;
      out << '\n';
    }
  }
}

RankingDataset NormalizeFeatures(const RankingDataset& dataset) {
  RankingDataset result = dataset;
  for (auto& query : result.queries) {
    if (query.documents.empty()) continue;
    const size_t p = query.documents.front().features.size();
    for (size_t j = 0; j < p; ++j) {
      double lo = query.documents.front().features[j];
      double hi = lo;
      for (const auto& doc : query.documents) {
        lo = std::min(lo, doc.features[j]);
        hi = std::max(hi, doc.features[j]);
      }
      const double span = hi - lo;
      for (auto& doc : query.documents) {
        doc.features[j] = span > 0.0 ? (doc.features[j] - lo) / span : 0.0;
      }
    }
  }
  return result;
}

RankingDataset SplitFolds(const RankingDataset& dataset, int num_folds,
                          uint64_t seed) {
  const int n = dataset.NumQueries();
  if (num_folds < 2) throw std::invalid_argument("need at least 2 folds");
  if (num_folds > n) {
    throw std::invalid_argument("more folds than queries: " +
                                std::to_string(num_folds) + " > " +
                                std::to_string(n));
  }
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed);
  rng.Shuffle(&perm);

  RankingDataset result = dataset;
  result.num_folds = num_folds;
  result.folds.clear();
  for (int i = 0; i < n; ++i) {
    result.folds[dataset.queries[perm[i]].qid] = (i % num_folds) + 1;
  }
  return result;
}

RankingDataset GenerateSynthetic(int n_queries, int docs_per_query, int p,
                                 int y_max, double noise_scale,
                                 uint64_t seed) {
  if (n_queries <= 0 || docs_per_query <= 0 || p <= 0 || y_max <= 0) {
    throw std::invalid_argument("synthetic dataset sizes must be positive");
  }
  Rng rng(seed);
  std::vector<double> hidden(p);
  for (auto& w : hidden) w = rng.Uniform(-1.0, 1.0);

  RankingDataset dataset;
  dataset.p = p;
  dataset.y_max = y_max;
  dataset.queries.resize(n_queries);
  for (int q = 0; q < n_queries; ++q) {
    Query& query = dataset.queries[q];
    query.qid = std::to_string(q + 1);
    query.documents.resize(docs_per_query);
    std::vector<double> latent(docs_per_query);
    for (int d = 0; d < docs_per_query; ++d) {
      Document& doc = query.documents[d];
      doc.doc_id = "q" + query.qid + "_d" + std::to_string(d + 1);
      doc.features.resize(p);
      double score = 0.0;
      for (int j = 0; j < p; ++j) {
        doc.features[j] = rng.Uniform01();
        score += hidden[j] * doc.features[j];
      }
      latent[d] = score + (noise_scale > 0.0 ? noise_scale * rng.Gaussian()
                                             : 0.0);
    }
    // Per-query quantile binning into y_max+1 grades; every grade appears
    // once docs_per_query >= y_max+1.
    std::vector<int> order(docs_per_query);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return latent[a] < latent[b];
    });
    for (int rank = 0; rank < docs_per_query; ++rank) {
      const int grade = std::min(
          y_max, static_cast<int>(static_cast<int64_t>(rank) * (y_max + 1) /
                                  docs_per_query));
      query.documents[order[rank]].label = grade;
    }
  }
  return dataset;
}

}  // namespace drmrr
