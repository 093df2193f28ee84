#include <cmath>

#include "doctest.h"
#include "metatp/common/error.hpp"
#include "metatp/model/path_encoder.hpp"
#include "test_util.hpp"

using namespace metatp;
using namespace metatp::model;
using testing::grad_check;
using testing::max_abs_diff;
using testing::random_matrix;
using testing::weighted_sum;

namespace {

struct Fixture {
  nn::ParameterStore store;
  Rng rng{17};
  PathEncoder enc;
  explicit Fixture(PathEncoderConfig cfg = {12, 5, 4, 6, 32}) : enc(store, "path", cfg, rng) {}
};

std::vector<int> random_path(Rng& rng, std::size_t len, int types) {
  std::vector<int> p(len);
  for (auto& id : p) id = 1 + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(types - 1)));
  return p;
}

}  // namespace

TEST_SUITE("path_encoder") {
  TEST_CASE("empty path encodes to zero") {
    Fixture f;
    CHECK(f.enc.encode_path({}).isZero(0.0));
    CHECK(f.enc.encode_path({0, 0, 0}).isZero(0.0));
    CHECK(f.enc.encode({{}, {3, 4}}).value().row(0).isZero(0.0));
  }

  TEST_CASE("same path twice gives identical vectors") {
    Fixture f;
    CHECK(f.enc.encode_path({3, 5, 7}) == f.enc.encode_path({3, 5, 7}));
  }

  TEST_CASE("hand-unrolled recurrence with h = 1 and d = 1") {
    Fixture f(PathEncoderConfig{4, 1, 1, 1, 32});
    const auto set = [](const Var& v, std::initializer_list<double> values) {
      Matrix& m = v.node().value;
      Index i = 0;
      for (double x : values) m.data()[i++] = x;
    };
    Matrix& e = f.enc.embedding().node().value;
    e(2, 0) = 0.5;
    e(3, 0) = -1.0;
    const auto& g = f.enc.forward_gru();
    set(g.w_ih, {0.1, 0.2, 0.3});
    set(g.w_hh, {0.4, 0.5, 0.6});
    set(g.b_ih, {0.01, 0.02, 0.03});
    set(g.b_hh, {0.04, 0.05, 0.06});
    const auto& b = f.enc.backward_gru();
    set(b.w_ih, {-0.2, 0.3, -0.4});
    set(b.w_hh, {0.1, -0.1, 0.2});
    set(b.b_ih, {0.0, 0.1, 0.0});
    set(b.b_hh, {0.05, 0.0, -0.05});
    set(f.enc.proj_w(), {0.7, -0.3});
    set(f.enc.proj_b(), {0.2});

    const auto sig = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
    const auto cell = [&](double x, double h, const double* wi, const double* wh, const double* bi, const double* bh) {
      const double r = sig(wi[0] * x + bi[0] + wh[0] * h + bh[0]);
      const double z = sig(wi[1] * x + bi[1] + wh[1] * h + bh[1]);
      const double n = std::tanh(wi[2] * x + bi[2] + r * (wh[2] * h + bh[2]));
      return (1.0 - z) * n + z * h;
    };
    const double fi[] = {0.1, 0.2, 0.3}, fh[] = {0.4, 0.5, 0.6}, fbi[] = {0.01, 0.02, 0.03}, fbh[] = {0.04, 0.05, 0.06};
    const double bi[] = {-0.2, 0.3, -0.4}, bh[] = {0.1, -0.1, 0.2}, bbi[] = {0.0, 0.1, 0.0}, bbh[] = {0.05, 0.0, -0.05};
    const double hf = cell(-1.0, cell(0.5, 0.0, fi, fh, fbi, fbh), fi, fh, fbi, fbh);
    const double hb = cell(0.5, cell(-1.0, 0.0, bi, bh, bbi, bbh), bi, bh, bbi, bbh);
    const double expected = 0.7 * hf - 0.3 * hb + 0.2;

    CHECK(f.enc.encode_path({2, 3})(0) == doctest::Approx(expected).epsilon(1e-14));
    CHECK(f.enc.encode({{2, 3}}).value()(0, 0) == doctest::Approx(expected).epsilon(1e-14));
  }

  TEST_CASE("batched table encoding matches per-path encoding") {
    Fixture f;
    corpus::PathTable table;
    Rng rng(3);
    for (int i = 0; i < 120; ++i) table.intern(random_path(rng, 1 + uniform_index(rng, 32), 12));
    const Matrix batched = f.enc.encode_path_table(table);
    REQUIRE(batched.rows() == table.size());
    CHECK(batched.row(0).isZero(0.0));
    double worst = 0.0;
    for (int k = 0; k < table.size(); ++k) {
      worst = std::max(worst, (batched.row(k) - f.enc.encode_path(table.entry(k))).cwiseAbs().maxCoeff());
    }
    CHECK(worst < 1e-6);

    // permuting inputs permutes outputs
    std::vector<std::vector<int>> fwd = table.entries(), rev(fwd.rbegin(), fwd.rend());
    const Matrix a = f.enc.encode(fwd).value(), b = f.enc.encode(rev).value();
    CHECK(max_abs_diff(a, b.colwise().reverse()) < 1e-12);
  }

  TEST_CASE("trailing padding never changes the output") {
    Fixture f;
    const std::vector<int> p{4, 7, 2};
    CHECK(f.enc.encode_path({4, 7, 2, 0, 0}) == f.enc.encode_path(p));
    const Matrix m = f.enc.encode({p, {4, 7, 2, 0}}).value();
    CHECK(max_abs_diff(m.row(0), m.row(1)) == 0.0);
  }

  TEST_CASE("direction sensitivity on a fixture path") {
    Fixture f;
    CHECK((f.enc.encode_path({3, 5, 9}) - f.enc.encode_path({9, 5, 3})).norm() > 1e-6);
  }

  TEST_CASE("errors") {
    Fixture f;
    try {
      f.enc.encode_path(std::vector<int>(33, 3));
      FAIL("expected PathTooLong");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kPathTooLong);
    }
    try {
      f.enc.encode_path({3, 12});
      FAIL("expected UnknownNodeType");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kUnknownNodeType);
    }
  }

  TEST_CASE("gradients match finite differences") {
    Fixture f;
    Rng rng(8);
    const std::vector<std::vector<int>> paths{random_path(rng, 3, 12), random_path(rng, 5, 12), {}, random_path(rng, 1, 12)};
    std::vector<Var> params;
    for (const auto& [name, v] : f.store.items()) params.push_back(v);
    const auto r = grad_check(params, [&] { return weighted_sum(f.enc.encode(paths), 4); });
    CHECK(r.worst < 1e-4);
  }

  TEST_CASE("padding row receives no gradient") {
    Fixture f;
    nn::backward(weighted_sum(f.enc.encode({{3, 0, 4}, {5}}), 2));
    CHECK(f.enc.embedding().grad().row(0).isZero(0.0));
    CHECK_FALSE(f.enc.embedding().grad().row(3).isZero());
  }
}
