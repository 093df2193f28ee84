#include "metatp/model/metrics.hpp"

#include <algorithm>

#include "metatp/common/error.hpp"

namespace metatp::model {

PrfCounts subtoken_prf(const std::vector<int>& predicted, const std::vector<int>& gold) {
  std::map<int, std::int64_t> remaining;
  for (int g : gold) ++remaining[g];
  PrfCounts c;
  for (int p : predicted) {
    auto it = remaining.find(p);
    if (it != remaining.end() && it->second > 0) {
      --it->second;
      ++c.tp;
    }
  }
  c.fp = static_cast<std::int64_t>(predicted.size()) - c.tp;
  c.fn = static_cast<std::int64_t>(gold.size()) - c.tp;
  return c;
}

PrfCounts subtoken_prf(const std::vector<std::vector<int>>& predicted, const std::vector<std::vector<int>>& gold) {
  if (predicted.size() != gold.size()) throw Error(ErrorCode::kDimensionMismatch, "subtoken_prf: sample counts differ");
  PrfCounts total;
  for (std::size_t i = 0; i < gold.size(); ++i) total += subtoken_prf(predicted[i], gold[i]);
  return total;
}

int answer_rank(const Eigen::Ref<const Eigen::RowVectorXd>& logits, int answer) {
  if (answer < 0 || answer >= logits.size()) throw Error(ErrorCode::kIndex, "answer id out of range");
  const double a = logits(answer);
  int rank = 1;
  for (Eigen::Index v = 0; v < logits.size(); ++v) {
    if (logits(v) > a || (logits(v) == a && v < answer)) ++rank;
  }
  return rank;
}

bool topk_hit(const Eigen::Ref<const Eigen::RowVectorXd>& logits, int answer, int k) {
  return answer_rank(logits, answer) <= k;
}

double topk_accuracy(const Eigen::Ref<const Eigen::MatrixXd>& logits, const std::vector<int>& answers, int k) {
  if (k < 1) throw Error(ErrorCode::kConfig, "k must be at least 1");
  if (static_cast<Eigen::Index>(answers.size()) != logits.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "topk_accuracy: answer count");
  }
  if (answers.empty()) return 0.0;
  std::int64_t hits = 0;
  for (Eigen::Index r = 0; r < logits.rows(); ++r) hits += topk_hit(logits.row(r), answers[static_cast<std::size_t>(r)], k);
  return static_cast<double>(hits) / static_cast<double>(answers.size());
}

void MetricsReport::add_summary(const std::string& language, const std::vector<int>& predicted,
                                const std::vector<int>& gold) {
  prf_[language] += subtoken_prf(predicted, gold);
}

void MetricsReport::add_completion(const std::string& language, const Eigen::Ref<const Eigen::RowVectorXd>& logits,
                                   int answer) {
  const int rank = answer_rank(logits, answer);
  auto& t = topk_[language];
  ++t.total;
  t.hit1 += rank <= 1;
  t.hit5 += rank <= 5;
}

void MetricsReport::merge(const MetricsReport& other) {
  for (const auto& [k, v] : other.prf_) prf_[k] += v;
  for (const auto& [k, v] : other.topk_) topk_[k] += v;
}

std::vector<std::string> MetricsReport::languages() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : prf_) out.push_back(k);
  for (const auto& [k, v] : topk_)
    if (!prf_.count(k)) out.push_back(k);
  std::sort(out.begin(), out.end());
  return out;
}

PrfCounts MetricsReport::prf_all() const {
  PrfCounts c;
  for (const auto& [k, v] : prf_) c += v;
  return c;
}

TopkCounts MetricsReport::topk_all() const {
  TopkCounts c;
  for (const auto& [k, v] : topk_) c += v;
  return c;
}

double MetricsReport::headline() const { return kind_ == Kind::kSummarization ? prf_all().f1() : topk_all().rate1(); }

namespace {

nlohmann::json prf_json(const PrfCounts& c) {
  return {{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"precision", c.precision()}, {"recall", c.recall()}, {"f1", c.f1()}};
}

nlohmann::json topk_json(const TopkCounts& c) {
  return {{"total", c.total}, {"hit1", c.hit1}, {"hit5", c.hit5}, {"hit1_rate", c.rate1()}, {"hit5_rate", c.rate5()}};
}

}  // namespace

nlohmann::json MetricsReport::to_json() const {
  nlohmann::json j;
  j["task"] = kind_ == Kind::kSummarization ? "summarization" : "completion";
  nlohmann::json rows = nlohmann::json::object();
  if (kind_ == Kind::kSummarization) {
    for (const auto& [k, v] : prf_) rows[k] = prf_json(v);
    rows["all"] = prf_json(prf_all());
  } else {
    for (const auto& [k, v] : topk_) rows[k] = topk_json(v);
    rows["all"] = topk_json(topk_all());
  }
  j["metrics"] = rows;
  return j;
}

MetricsReport MetricsReport::from_json(const nlohmann::json& j) {
  MetricsReport r(j.at("task").get<std::string>() == "summarization" ? Kind::kSummarization : Kind::kCompletion);
  for (const auto& [k, v] : j.at("metrics").items()) {
    if (k == "all") continue;
    if (r.kind_ == Kind::kSummarization) {
      r.prf_[k] = {v.at("tp").get<std::int64_t>(), v.at("fp").get<std::int64_t>(), v.at("fn").get<std::int64_t>()};
    } else {
      r.topk_[k] = {v.at("total").get<std::int64_t>(), v.at("hit1").get<std::int64_t>(), v.at("hit5").get<std::int64_t>()};
    }
  }
  return r;
}

}  // namespace metatp::model
