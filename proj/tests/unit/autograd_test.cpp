#include <cmath>
#include <sstream>

#include "doctest.h"
#include "metatp/common/error.hpp"
#include "metatp/nn/ops.hpp"
#include "metatp/nn/parameters.hpp"
#include "test_util.hpp"

using namespace metatp;
using namespace metatp::nn;
using testing::grad_check;
using testing::random_matrix;
using testing::weighted_sum;

namespace {

Var param(Index r, Index c, Rng& rng, double scale = 1.0) { return parameter(random_matrix(r, c, rng, scale)); }

}  // namespace

TEST_SUITE("autograd") {
  TEST_CASE("elementwise and matrix ops pass finite differences") {
    Rng rng(11);
    Var a = param(3, 4, rng), b = param(3, 4, rng), w = param(4, 2, rng), bias = param(1, 2, rng);
    Var row = param(1, 4, rng), col = param(3, 1, rng), p = param(1, 3, rng);
    const std::vector<Var> all{a, b, w, bias, row, col, p};
    const auto check = [&](const char* name, const std::function<Var()>& f) {
      INFO(name);
      CHECK(grad_check(all, f).worst < 1e-6);
    };
    check("matmul", [&] { return weighted_sum(matmul(a, w), 1); });
    check("linear", [&] { return weighted_sum(linear(a, w, bias), 2); });
    check("add/sub/mul", [&] { return weighted_sum(mul(add(a, b), sub(a, b)), 3); });
    check("scale/one_minus", [&] { return weighted_sum(one_minus(scale(a, 0.3)), 4); });
    check("add_row", [&] { return weighted_sum(add_row(a, row), 5); });
    check("mul_col", [&] { return weighted_sum(mul_col(a, col), 6); });
    check("scale_rows", [&] { return weighted_sum(scale_rows(a, p), 7); });
    check("sigmoid/tanh", [&] { return weighted_sum(tanh(sigmoid(a)), 8); });
    check("softmax_rows", [&] { return weighted_sum(softmax_rows(a), 9); });
    check("layer_norm", [&] { return weighted_sum(layer_norm(a, row, scale(row, 0.5)), 10); });
    check("concat/slice", [&] {
      return weighted_sum(slice_cols(concat_rows({a, slice_rows(b, 1, 2)}), 1, 2), 11);
    });
    check("concat_cols", [&] { return weighted_sum(concat_cols({a, b}), 12); });
    check("mean", [&] { return mean(mul(a, a)); });
    check("grouped_matmul", [&] {
      return weighted_sum(grouped_matmul(a, {w, scale(w, -2.0)}, {0, 1, 0}), 13);
    });
  }

  TEST_CASE("relu gradient away from the kink") {
    Rng rng(3);
    Matrix m = random_matrix(4, 4, rng);
    for (Index i = 0; i < m.size(); ++i)
      if (std::abs(m.data()[i]) < 0.05) m.data()[i] = 0.3;
    Var a = parameter(m);
    CHECK(grad_check({a}, [&] { return weighted_sum(relu(a), 1); }).worst < 1e-6);
  }

  TEST_CASE("gather_rows leaves the frozen row untouched") {
    Rng rng(5);
    Var table = param(5, 3, rng);
    const std::vector<int> ids{0, 2, -1, 2, 4};
    CHECK(grad_check({table}, [&] { return weighted_sum(gather_rows(table, ids), 2); }).worst < 1e-6);
    table.node().grad.resize(0, 0);
    backward(weighted_sum(gather_rows(table, ids, 0), 2));
    CHECK(table.grad().row(0).isZero());
    CHECK(table.grad().row(1).isZero());
    CHECK_FALSE(table.grad().row(2).isZero());
    CHECK(gather_rows(table, ids).value().row(2).isZero());
    CHECK_THROWS_AS(gather_rows(table, {7}), Error);
  }

  TEST_CASE("losses") {
    Rng rng(8);
    Var logits = param(4, 5, rng, 2.0);
    const std::vector<int> targets{1, -1, 4, 0};
    CHECK(grad_check({logits}, [&] { return cross_entropy(logits, targets); }).worst < 1e-6);
    Var probs_src = param(3, 4, rng);
    CHECK(grad_check({probs_src}, [&] { return nll_of_probs(softmax_rows(probs_src), {2, 0, -1}); }).worst < 1e-6);

    // uniform logits give ln V
    CHECK(cross_entropy(constant(Matrix::Zero(2, 7)), {3, 5}).scalar() == doctest::Approx(std::log(7.0)));
    Matrix onehot = Matrix::Zero(2, 3);
    onehot(0, 1) = 1.0;
    onehot(1, 2) = 1.0;
    CHECK(nll_of_probs(constant(onehot), {1, 2}).scalar() == doctest::Approx(0.0));
    // two-step hand example: -(ln 0.5 + ln 0.25) / 2
    Matrix two(2, 2);
    two << 0.5, 0.5, 0.75, 0.25;
    CHECK(nll_of_probs(constant(two), {0, 1}).scalar() == doctest::Approx(-(std::log(0.5) + std::log(0.25)) / 2.0));
  }

  TEST_CASE("scatter_columns") {
    Rng rng(2);
    Var c = param(2, 3, rng);
    const std::vector<int> ids{1, 1, 3, 0, -1, 2};
    const Matrix out = scatter_columns(c, ids, 4).value();
    CHECK(out(0, 1) == doctest::Approx(c.value()(0, 0) + c.value()(0, 1)));
    CHECK(out(0, 3) == doctest::Approx(c.value()(0, 2)));
    CHECK(out(1, 0) == doctest::Approx(c.value()(1, 0)));
    CHECK(out(1, 2) == doctest::Approx(c.value()(1, 2)));
    CHECK(grad_check({c}, [&] { return weighted_sum(scatter_columns(c, ids, 4), 9); }).worst < 1e-6);
  }

  TEST_CASE("shape errors") {
    Var a = constant(Matrix::Ones(2, 3));
    Var b = constant(Matrix::Ones(2, 2));
    try {
      matmul(a, b);
      FAIL("expected DimensionMismatch");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kDimensionMismatch);
    }
    CHECK_THROWS_AS(add(a, b), Error);
  }

  TEST_CASE("dropout") {
    Rng rng(1);
    Var a = constant(Matrix::Ones(200, 50));
    CHECK(dropout(a, 0.3, rng, false).value() == a.value());
    const Matrix d = dropout(a, 0.3, rng, true).value();
    const double kept = static_cast<double>((d.array() > 0).count()) / static_cast<double>(d.size());
    CHECK(kept == doctest::Approx(0.7).epsilon(0.05));
    CHECK(d.maxCoeff() == doctest::Approx(1.0 / 0.7));
    CHECK(d.mean() == doctest::Approx(1.0).epsilon(0.05));
  }

  TEST_CASE("no-grad mode records nothing") {
    Rng rng(4);
    Var a = param(2, 2, rng);
    {
      NoGradGuard guard;
      CHECK_FALSE(grad_enabled());
      CHECK_FALSE(matmul(a, a).requires_grad());
    }
    CHECK(grad_enabled());
    CHECK(matmul(a, a).requires_grad());
  }

  TEST_CASE("gradients accumulate through shared subexpressions") {
    Var x = parameter(Matrix::Constant(1, 1, 3.0));
    Var y = mul(x, x);
    backward(sum(add(y, y)));
    CHECK(x.grad()(0, 0) == doctest::Approx(12.0));
  }

  TEST_CASE("parameter store and Adam") {
    Rng rng(6);
    ParameterStore store;
    Var w = store.add("w", random_matrix(3, 3, rng));
    CHECK_THROWS_AS(store.add("w", Matrix::Zero(1, 1)), Error);
    CHECK(store.num_scalars() == 9);

    const Matrix before = w.value();
    Adam zero_lr(store, AdamOptions{0.0});
    backward(weighted_sum(w, 1));
    zero_lr.step();
    CHECK(w.value() == before);

    store.zero_grad();
    backward(scale(weighted_sum(w, 1), 100.0));
    const double norm = store.grad_norm();
    CHECK(store.clip_grad_norm(1.0) == doctest::Approx(norm));
    CHECK(store.grad_norm() == doctest::Approx(1.0));

    Adam adam(store, AdamOptions{0.01});
    adam.step();
    // first Adam step moves each coordinate by lr against the gradient sign
    const Matrix delta = w.value() - before;
    for (Index i = 0; i < delta.size(); ++i) {
      CHECK(std::abs(delta.data()[i]) == doctest::Approx(0.01).epsilon(1e-3));
      CHECK(delta.data()[i] * w.grad().data()[i] < 0.0);
    }
    std::stringstream ss;
    adam.save(ss);
    Adam other(store, AdamOptions{0.01});
    other.load(ss);
    CHECK(other.steps() == 1);
  }

  TEST_CASE("matrix serialization") {
    Rng rng(9);
    const Matrix m = random_matrix(3, 5, rng);
    std::stringstream ss;
    write_matrix(ss, m);
    CHECK(read_matrix(ss) == m);
    std::stringstream bad("xx");
    CHECK_THROWS_AS(read_matrix(bad), Error);
  }
}
