#include "doctest.h"
#include "metatp/model/metrics.hpp"
#include "test_util.hpp"

using namespace metatp;
using namespace metatp::model;

TEST_SUITE("metrics") {
  TEST_CASE("subtoken precision recall f1") {
    // predicted [get, user, name], gold [get, name]
    const auto c = subtoken_prf({7, 8, 9}, {7, 9});
    CHECK(c.precision() == doctest::Approx(2.0 / 3.0));
    CHECK(c.recall() == doctest::Approx(1.0));
    CHECK(c.f1() == doctest::Approx(0.8));

    const auto exact = subtoken_prf({7, 9}, {7, 9});
    CHECK(exact.f1() == doctest::Approx(1.0));

    const auto empty = subtoken_prf({}, {7, 9});
    CHECK(empty.precision() == 0.0);
    CHECK(empty.recall() == 0.0);
    CHECK(empty.f1() == 0.0);

    // duplicates count once per gold occurrence
    const auto dup = subtoken_prf({7, 7, 7}, {7, 8});
    CHECK(dup.tp == 1);
    CHECK(dup.fp == 2);
    CHECK(dup.fn == 1);
  }

  TEST_CASE("micro aggregation sums counts") {
    const std::vector<std::vector<int>> pred{{1, 2}, {3}, {}};
    const std::vector<std::vector<int>> gold{{1}, {3, 4}, {5}};
    const auto c = subtoken_prf(pred, gold);
    CHECK(c.tp == 2);
    CHECK(c.fp == 1);
    CHECK(c.fn == 2);
    CHECK(c.f1() == doctest::Approx(2.0 * (2.0 / 3.0) * 0.5 / (2.0 / 3.0 + 0.5)));
  }

  TEST_CASE("top-k hand case") {
    Eigen::RowVectorXd logits(3);
    logits << 0.1, 0.9, 0.5;
    CHECK(answer_rank(logits, 2) == 2);
    CHECK_FALSE(topk_hit(logits, 2, 1));
    CHECK(topk_hit(logits, 2, 2));
    CHECK(topk_hit(logits, 0, 3));
    Eigen::RowVectorXd tied(3);
    tied << 1.0, 1.0, 0.0;
    CHECK(answer_rank(tied, 0) == 1);
    CHECK(answer_rank(tied, 1) == 2);
  }

  TEST_CASE("top-k is monotone in k and saturates at the vocabulary size") {
    Rng rng(5);
    const int v = 20;
    for (int trial = 0; trial < 1000; ++trial) {
      const Eigen::RowVectorXd logits = testing::random_matrix(1, v, rng).row(0);
      const int answer = static_cast<int>(uniform_index(rng, v));
      bool prev = false;
      for (int k = 1; k <= v; ++k) {
        const bool hit = topk_hit(logits, answer, k);
        CHECK((!prev || hit));
        prev = hit;
      }
      REQUIRE(prev);
    }
    Eigen::MatrixXd batch(2, 3);
    batch << 0, 1, 2, 2, 1, 0;
    CHECK(topk_accuracy(batch, {2, 2}, 1) == doctest::Approx(0.5));
    CHECK(topk_accuracy(batch, {2, 2}, 3) == doctest::Approx(1.0));
  }

  TEST_CASE("report aggregates per language") {
    MetricsReport r(MetricsReport::Kind::kSummarization);
    r.add_summary("python", {1, 2}, {1});
    r.add_summary("javascript", {3}, {3, 4});
    const auto j = r.to_json();
    CHECK(j["metrics"]["python"]["tp"] == 1);
    CHECK(j["metrics"]["all"]["tp"] == 2);
    CHECK(j["metrics"]["all"]["fn"] == 1);
    CHECK(r.headline() == doctest::Approx(r.prf_all().f1()));
    CHECK(MetricsReport::from_json(j) == r);
    CHECK(r.languages() == std::vector<std::string>{"javascript", "python"});

    MetricsReport single(MetricsReport::Kind::kCompletion);
    Eigen::RowVectorXd logits(4);
    logits << 0.0, 3.0, 1.0, 2.0;
    single.add_completion("go", logits, 1);
    single.add_completion("go", logits, 0);
    const auto sj = single.to_json();
    CHECK(sj["metrics"]["go"] == sj["metrics"]["all"]);
    CHECK(single.headline() == doctest::Approx(0.5));
    CHECK(single.topk_all().rate5() == doctest::Approx(1.0));
    CHECK(MetricsReport::from_json(sj) == single);

    MetricsReport merged(MetricsReport::Kind::kCompletion);
    merged.merge(single);
    merged.merge(single);
    CHECK(merged.topk("go").total == 4);
  }
}
