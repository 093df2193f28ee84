#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"

namespace metatp::model {

struct PrfCounts {
  std::int64_t tp = 0, fp = 0, fn = 0;

  double precision() const { return tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp); }
  double recall() const { return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn); }
  double f1() const {
    const double p = precision(), r = recall();
    return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
  }
  PrfCounts& operator+=(const PrfCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
};

// Multiset overlap of one prediction with its gold sequence.
PrfCounts subtoken_prf(const std::vector<int>& predicted, const std::vector<int>& gold);
// Micro-aggregated over samples.
PrfCounts subtoken_prf(const std::vector<std::vector<int>>& predicted, const std::vector<std::vector<int>>& gold);

// Rank of `answer` with ties broken toward lower ids, 1-based.
int answer_rank(const Eigen::Ref<const Eigen::RowVectorXd>& logits, int answer);
bool topk_hit(const Eigen::Ref<const Eigen::RowVectorXd>& logits, int answer, int k);
double topk_accuracy(const Eigen::Ref<const Eigen::MatrixXd>& logits, const std::vector<int>& answers, int k);

struct TopkCounts {
  std::int64_t total = 0, hit1 = 0, hit5 = 0;
  double rate1() const { return total == 0 ? 0.0 : static_cast<double>(hit1) / static_cast<double>(total); }
  double rate5() const { return total == 0 ? 0.0 : static_cast<double>(hit5) / static_cast<double>(total); }
  TopkCounts& operator+=(const TopkCounts& o) {
    total += o.total;
    hit1 += o.hit1;
    hit5 += o.hit5;
    return *this;
  }
};

// Per-language counts; "all" is the sum of the rows.
class MetricsReport {
 public:
  enum class Kind { kSummarization, kCompletion };

  explicit MetricsReport(Kind kind) : kind_(kind) {}

  void add_summary(const std::string& language, const std::vector<int>& predicted, const std::vector<int>& gold);
  void add_completion(const std::string& language, const Eigen::Ref<const Eigen::RowVectorXd>& logits, int answer);
  void merge(const MetricsReport& other);

  Kind kind() const { return kind_; }
  std::vector<std::string> languages() const;
  const PrfCounts& prf(const std::string& language) const { return prf_.at(language); }
  const TopkCounts& topk(const std::string& language) const { return topk_.at(language); }
  PrfCounts prf_all() const;
  TopkCounts topk_all() const;
  // F1 for summarization, hit@1 for completion.
  double headline() const;

  nlohmann::json to_json() const;
  static MetricsReport from_json(const nlohmann::json& j);

  friend bool operator==(const MetricsReport& a, const MetricsReport& b) { return a.to_json() == b.to_json(); }

 private:
  Kind kind_;
  std::map<std::string, PrfCounts> prf_;
  std::map<std::string, TopkCounts> topk_;
};

}  // namespace metatp::model
