#include <cmath>

#include "doctest.h"
#include "metatp/common/error.hpp"
#include "metatp/corpus/vocabulary.hpp"
#include "metatp/model/heads.hpp"
#include "metatp/nn/ops.hpp"
#include "test_util.hpp"

using namespace metatp;
using namespace metatp::model;
using testing::grad_check;
using testing::max_abs_diff;
using testing::random_matrix;

namespace {

Matrix row(std::initializer_list<double> v) {
  Matrix m(1, static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) m(0, i++) = x;
  return m;
}

Matrix softmax(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Index r = 0; r < logits.rows(); ++r) {
    const double mx = logits.row(r).maxCoeff();
    double total = 0.0;
    for (Index c = 0; c < logits.cols(); ++c) total += (out(r, c) = std::exp(logits(r, c) - mx));
    out.row(r) /= total;
  }
  return out;
}

}  // namespace

TEST_SUITE("heads") {
  TEST_CASE("pointer mix hand cases") {
    const Var vocab = nn::constant(row({0.6, 0.4}));
    const Var copy = nn::constant(row({1.0}));
    const std::vector<int> ids{1};
    auto mix = [&](double g) { return pointer_mix(vocab, copy, ids, nn::constant(row({g}))).value(); };
    CHECK(max_abs_diff(mix(0.5), row({0.3, 0.7})) < 1e-12);
    CHECK(max_abs_diff(mix(1.0), row({0.6, 0.4})) < 1e-12);
    CHECK(max_abs_diff(mix(0.0), row({0.0, 1.0})) < 1e-12);
  }

  TEST_CASE("pointer mix sums repeated ids and stays normalized") {
    Rng rng(1);
    const Matrix vocab = softmax(random_matrix(3, 6, rng, 2.0));
    const Matrix copy = softmax(random_matrix(3, 4, rng, 2.0));
    Matrix gate(3, 1);
    gate << 0.2, 0.5, 0.9;
    const std::vector<int> ids{2, 2, 5, -1, 0, 1, 2, 3, 4, 4, 4, 4};
    const Matrix out = pointer_mix(nn::constant(vocab), nn::constant(copy), ids, nn::constant(gate)).value();
    // row 0 copies onto ids 2 and 5; the padding column drops its mass
    CHECK(out(0, 2) == doctest::Approx(0.2 * vocab(0, 2) + 0.8 * (copy(0, 0) + copy(0, 1))));
    CHECK(out(0, 5) == doctest::Approx(0.2 * vocab(0, 5) + 0.8 * copy(0, 2)));
    CHECK(out.row(1).sum() == doctest::Approx(1.0));
    CHECK(out(2, 4) == doctest::Approx(0.9 * vocab(2, 4) + 0.1));
    CHECK(out.row(2).sum() == doctest::Approx(1.0));
  }

  TEST_CASE("pointer mix gradient") {
    Rng rng(2);
    const Var logits = nn::parameter(random_matrix(2, 5, rng));
    const Var attn = nn::parameter(random_matrix(2, 3, rng));
    const Var gate = nn::parameter(random_matrix(2, 1, rng));
    const std::vector<int> ids{0, 3, 3, 1, 4, -1};
    const auto loss = [&] {
      const Var out = pointer_mix(nn::softmax_rows(logits), nn::softmax_rows(attn), ids, nn::sigmoid(gate));
      return sequence_loss(out, {3, 1});
    };
    CHECK(grad_check({logits, attn, gate}, loss).worst < 1e-4);
  }

  TEST_CASE("sequence loss") {
    Matrix p(3, 2);
    p << 0.25, 0.75, 0.5, 0.5, 0.9, 0.1;
    const double got = sequence_loss(nn::constant(p), {1, 0, -1}).scalar();
    CHECK(got == doctest::Approx((-std::log(0.75) - std::log(0.5)) / 2.0));
  }

  TEST_CASE("completion logits and loss") {
    Rng rng(3);
    const Var enc = nn::parameter(random_matrix(4, 3, rng));
    const Var w = nn::parameter(random_matrix(3, 7, rng));
    const Var b = nn::parameter(random_matrix(1, 7, rng));
    const std::vector<int> ids{10, corpus::special::kMask, 11, 12};
    const Matrix logits = completion_logits(enc, 1, ids, w, b).value();
    CHECK(logits.rows() == 1);
    CHECK(logits.cols() == 7);
    CHECK(max_abs_diff(logits, enc.value().row(1) * w.value() + b.value()) < 1e-12);

    try {
      completion_logits(enc, 0, ids, w, b);
      FAIL("expected BadMaskPosition");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kBadMaskPosition);
    }
    CHECK_THROWS_AS(completion_logits(enc, 9, ids, w, b), Error);

    const Var zero_w = nn::constant(Matrix::Zero(3, 7)), zero_b = nn::constant(Matrix::Zero(1, 7));
    const Var z = completion_logits(enc, 1, ids, zero_w, zero_b);
    CHECK(completion_loss(z, {4}).scalar() == doctest::Approx(std::log(7.0)));

    const auto loss = [&] { return completion_loss(completion_logits(enc, 1, ids, w, b), {5}); };
    CHECK(grad_check({enc, w, b}, loss).worst < 1e-4);
  }

  TEST_CASE("greedy decode") {
    const int bos = 3, eos = 4;
    int calls = 0;
    const auto eos_first = [&](int, int) {
      ++calls;
      Eigen::RowVectorXd d = Eigen::RowVectorXd::Zero(8);
      d(eos) = 1.0;
      return d;
    };
    CHECK(greedy_decode(eos_first, bos, eos, 5).empty());
    CHECK(calls == 1);

    std::vector<std::pair<int, int>> seen;
    const auto count_up = [&](int token, int pos) {
      seen.emplace_back(token, pos);
      Eigen::RowVectorXd d = Eigen::RowVectorXd::Constant(8, 0.01);
      d(pos + 5) = 0.5;
      return d;
    };
    const auto out = greedy_decode(count_up, bos, eos, 3);
    CHECK(out == std::vector<int>{5, 6, 7});
    CHECK(seen == std::vector<std::pair<int, int>>{{bos, 0}, {5, 1}, {6, 2}});

    // ties resolve to the lower id
    const auto ties = [](int, int) { return Eigen::RowVectorXd::Constant(8, 0.125).eval(); };
    CHECK(greedy_decode(ties, bos, eos, 2) == std::vector<int>{0, 0});
  }
}
