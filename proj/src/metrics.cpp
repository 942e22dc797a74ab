#include "drmrr/metrics.hpp"

#include <algorithm>
#include <functional>
#include <ostream>
#include <stdexcept>

namespace drmrr {

double DcgAtK(const std::vector<int>& labels_in_rank_order, int k,
              double log_base) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  const int n = static_cast<int>(labels_in_rank_order.size());
  double dcg = 0.0;
  for (int r = 1; r <= std::min(k, n); ++r) {
    dcg += labels_in_rank_order[r - 1] * Discount(r, log_base);
  }
  return dcg;
}

double NdcgAtK(const std::vector<int>& labels_in_rank_order,
               const std::vector<int>& ideal_labels, int k, double log_base) {
  std::vector<int> ideal = ideal_labels;
  std::sort(ideal.begin(), ideal.end(), std::greater<int>());
  const double idcg = DcgAtK(ideal, k, log_base);
  if (idcg <= 0.0) return 0.0;
  return DcgAtK(labels_in_rank_order, k, log_base) / idcg;
}

double PrecisionAtK(const std::vector<int>& labels_in_rank_order, int k) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  const int n = static_cast<int>(labels_in_rank_order.size());
  int relevant = 0;
  for (int j = 0; j < std::min(k, n); ++j) {
    if (labels_in_rank_order[j] >= 1) ++relevant;
  }
  return static_cast<double>(relevant) / k;
}

double ApAtK(const std::vector<int>& labels_in_rank_order, int k) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  const int n = static_cast<int>(labels_in_rank_order.size());
  int relevant = 0;
  double sum = 0.0;
  for (int j = 1; j <= std::min(k, n); ++j) {
    if (labels_in_rank_order[j - 1] >= 1) {
      ++relevant;
      sum += static_cast<double>(relevant) / j;  // P@j at this position
    }
  }
  if (relevant == 0) return 0.0;
  return sum / relevant;
}

void MetricsReport::ComputeMeans() {
  means.clear();
  std::map<std::string, std::pair<double, int>> acc;
  for (const auto& [qid, values] : per_query) {
    for (const auto& [metric, value] : values) {
      acc[metric].first += value;
      acc[metric].second += 1;
    }
  }
  for (const auto& [metric, sum_count] : acc) {
    means[metric] = sum_count.first / sum_count.second;
  }
}

void MetricsReport::WriteCsv(std::ostream& out) const {
  out << "fold,qid,metric,value\n";
  for (const auto& [qid, values] : per_query) {
    for (const auto& [metric, value] : values) {
      out << fold << ',' << qid << ',' << metric << ',' << value << '\n';
    }
  }
  for (const auto& [metric, value] : means) {
    out << fold << ",MEAN," << metric << ',' << value << '\n';
  }
}

double MeanMetric(const std::vector<MetricsReport>& reports,
                  const std::string& metric) {
  double sum = 0.0;
  int count = 0;
  for (const auto& report : reports) {
    for (const auto& [qid, values] : report.per_query) {
      const auto it = values.find(metric);
      if (it != values.end()) {
        sum += it->second;
        ++count;
      }
    }
  }
  if (count == 0) throw std::invalid_argument("no values for " + metric);
  return sum / count;
}

}  // namespace drmrr
