#include <Eigen/LU>

#include "doctest.h"
#include "metatp/common/error.hpp"
#include "metatp/model/attention.hpp"
#include "metatp/model/meta_learner.hpp"
#include "metatp/nn/ops.hpp"
#include "test_util.hpp"

using namespace metatp;
using namespace metatp::model;
using testing::grad_check;
using testing::max_abs_diff;
using testing::random_matrix;
using testing::weighted_sum;

namespace {

FactorizedGenerator random_generator(int d, int d_p, Rng& rng) {
  return {Slot::kQ, nn::parameter(random_matrix(d_p, d, rng)), nn::parameter(random_matrix(d, d_p, rng))};
}

std::vector<Slot> populated(const GeneratorBank& bank, int layer) {
  std::vector<Slot> out;
  for (Slot s : kAllSlots)
    if (bank.find(layer, s)) out.push_back(s);
  return out;
}

}  // namespace

TEST_SUITE("meta_learner") {
  TEST_CASE("generate_weight hand example") {
    Matrix m(2, 2), mp = Matrix::Identity(2, 2), p(1, 2), want(2, 2);
    m << 1, 2, 3, 4;
    p << 2, 3;
    want << 2, 4, 9, 12;
    const FactorizedGenerator g{Slot::kQ, nn::constant(m), nn::constant(mp)};
    CHECK(generate_weight(g, nn::constant(p)).value() == want);
  }

  TEST_CASE("all-ones and one-hot codes") {
    Rng rng(2);
    const auto g = random_generator(5, 7, rng);
    const Matrix ones = Matrix::Ones(1, 7);
    CHECK(max_abs_diff(generate_weight(g, nn::constant(ones)).value(), g.m_prime.value() * g.m.value()) < 1e-12);
    Matrix hot = Matrix::Zero(1, 7);
    hot(0, 3) = 1.0;
    const Matrix w = generate_weight(g, nn::constant(hot)).value();
    CHECK(max_abs_diff(w, g.m_prime.value().col(3) * g.m.value().row(3)) < 1e-12);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(w);
    CHECK(lu.rank() <= 1);
  }

  TEST_CASE("generate_weight is linear in the code") {
    Rng rng(3);
    const auto g = random_generator(6, 9, rng);
    for (int trial = 0; trial < 20; ++trial) {
      const Matrix p1 = random_matrix(1, 9, rng), p2 = random_matrix(1, 9, rng);
      const double a = 2.0 * uniform_unit(rng) - 1.0, b = 3.0 * uniform_unit(rng);
      const Matrix lhs = generate_weight(g, nn::constant(a * p1 + b * p2)).value();
      const Matrix rhs = a * generate_weight(g, nn::constant(p1)).value() + b * generate_weight(g, nn::constant(p2)).value();
      CHECK(max_abs_diff(lhs, rhs) < 1e-10);
    }
  }

  TEST_CASE("dimension mismatch") {
    Rng rng(4);
    const auto g = random_generator(4, 3, rng);
    try {
      generate_weight(g, nn::constant(Matrix::Ones(1, 4)));
      FAIL("expected DimensionMismatch");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kDimensionMismatch);
    }
  }

  TEST_CASE("scheme slot sets and parameter counts") {
    for (const Scheme scheme : {Scheme::kNone, Scheme::kAlpha, Scheme::kBeta, Scheme::kGamma}) {
      nn::ParameterStore store;
      Rng rng(5);
      const int d = 8, d_p = 6;
      const GeneratorBank bank(store, "gen", MetaConfig{scheme, 2, d, 4, d_p, 3}, rng);
      std::vector<Slot> want;
      if (scheme == Scheme::kAlpha) want = {Slot::kQ, Slot::kK, Slot::kV};
      if (scheme == Scheme::kBeta) want = {Slot::kRK, Slot::kRV, Slot::kAQ, Slot::kAK};
      if (scheme == Scheme::kGamma) want = {kAllSlots.begin(), kAllSlots.end()};
      for (int l = 0; l < 3; ++l) {
        CHECK(populated(bank, l) == want);
        for (Slot s : want) CHECK(bank.find(l, s)->num_parameters() == 2 * d * d_p);
      }
      CHECK(store.num_scalars() == static_cast<std::int64_t>(3 * want.size() * 2 * d * d_p));
    }
    // 2 d d_P < d_P d^2 for d > 2
    for (int d = 3; d < 40; ++d) CHECK(2 * d * 16 < 16 * d * d);
  }

  TEST_CASE("weight_set_for substitutes exactly the populated slots") {
    nn::ParameterStore store;
    Rng rng(6);
    const int d = 4;
    const auto static_set = make_static_weight_set(store, "static", d, rng);
    const MetaLearner alpha(store, "alpha", MetaConfig{Scheme::kAlpha, 2, d, 3, 5, 1}, rng);
    const auto set = alpha.weight_set_for(0, alpha.project_language(1), static_set);
    for (Slot s : kAllSlots) {
      const bool gen = s == Slot::kQ || s == Slot::kK || s == Slot::kV;
      CHECK((set.tag_of(s) == WeightTag::kGenerated) == gen);
      if (!gen) CHECK(set[s].ptr() == static_set[s].ptr());
    }

    const MetaLearner none(store, "none", MetaConfig{Scheme::kNone, 2, d, 3, 5, 1}, rng);
    const auto same = none.weight_set_for(0, none.project_language(0), static_set);
    for (Slot s : kAllSlots) {
      CHECK(same[s].ptr() == static_set[s].ptr());
      CHECK(same.tag_of(s) == WeightTag::kStatic);
    }

    const MetaLearner gamma(store, "gamma", MetaConfig{Scheme::kGamma, 2, d, 3, 5, 1}, rng);
    const auto all = weight_set_for(gamma.bank(), 0, nn::constant(Matrix::Ones(1, 5)), static_set);
    for (Slot s : kAllSlots) {
      const auto* g = gamma.bank().find(0, s);
      CHECK(max_abs_diff(all[s].value(), g->m_prime.value() * g->m.value()) < 1e-12);
    }
  }

  TEST_CASE("project_language") {
    nn::ParameterStore store;
    Rng rng(7);
    const MetaLearner meta(store, "meta", MetaConfig{Scheme::kAlpha, 3, 8, 4, 6, 1}, rng);
    CHECK(meta.project_language(2).value() == meta.project_language(2).value());
    CHECK(meta.project_language(0).cols() == 6);
    CHECK((meta.project_language(0).value() - meta.project_language(1).value()).norm() > 0.0);
    try {
      meta.project_language(3);
      FAIL("expected UnknownLanguage");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kUnknownLanguage);
    }
    meta.language_table().node().value.row(1).setZero();
    CHECK(meta.project_language(1).value().isZero(0.0));

    // distinct languages give distinct weight sets
    const auto static_set = make_static_weight_set(store, "s", 8, rng);
    const auto w0 = meta.weight_set_for(0, meta.project_language(0), static_set);
    const auto w2 = meta.weight_set_for(0, meta.project_language(2), static_set);
    CHECK((w0[Slot::kQ].value() - w2[Slot::kQ].value()).norm() > 0.0);
  }

  TEST_CASE("full-scale projection width") {
    nn::ParameterStore store;
    Rng rng(8);
    const MetaLearner meta(store, "meta", MetaConfig{Scheme::kNone, 4, 16, 1024, 2048, 1}, rng);
    CHECK(meta.project_language(3).cols() == 2048);
  }

  TEST_CASE("gradient through embedding, projection and generator") {
    nn::ParameterStore store;
    Rng rng(9);
    const MetaLearner meta(store, "meta", MetaConfig{Scheme::kGamma, 2, 4, 3, 5, 1}, rng);
    const Var x = nn::constant(random_matrix(3, 4, rng));
    std::vector<Var> params;
    for (const auto& [name, v] : store.items()) params.push_back(v);
    const auto r = grad_check(params, [&] {
      const Var p = meta.project_language(1);
      const Var w = generate_weight(*meta.bank().find(0, Slot::kV), p);
      return weighted_sum(nn::tanh(nn::matmul(x, w)), 3);
    });
    CHECK(r.worst < 1e-4);
  }
}
