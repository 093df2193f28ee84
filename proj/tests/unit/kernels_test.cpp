#include <cmath>

#include "doctest.h"
#include "metatp/common/error.hpp"
#include "metatp/kernels/attention.hpp"
#include "metatp/kernels/gru.hpp"
#include "test_util.hpp"

using namespace metatp;
using namespace metatp::kernels;
using testing::max_abs_diff;
using testing::random_matrix;

namespace {

struct AttentionFixture {
  Matrix q, k, v, aq, ak, rk, rv;
  AttentionArgs args;

  AttentionTensors tensors() const { return {&q, &k, &v, &aq, &ak, &rk, &rv}; }
};

AttentionFixture make_fixture(Rng& rng, bool causal) {
  AttentionFixture f;
  const int d = 8;
  const std::vector<int> lens{5, 1, 7, 3};
  int rows = 0;
  std::int64_t rel = 0;
  for (int len : lens) {
    AttentionSegment s{rows, len, rows, len, rel};
    f.args.segments.push_back(s);
    for (int i = 0; i < len * len; ++i) f.args.rel_ids.push_back(static_cast<int>(uniform_index(rng, 7)) - 1);
    rows += len;
    rel += len * len;
  }
  f.args.heads = 2;
  f.args.content_scale = 0.5;
  f.args.abs_scale = 0.25;
  f.args.causal = causal;
  f.args.key_valid.assign(static_cast<std::size_t>(rows), 1);
  f.args.key_valid[3] = 0;
  f.args.key_valid[10] = 0;
  f.q = random_matrix(rows, d, rng);
  f.k = random_matrix(rows, d, rng);
  f.v = random_matrix(rows, d, rng);
  f.aq = random_matrix(rows, d, rng);
  f.ak = random_matrix(rows, d, rng);
  f.rk = random_matrix(6, d, rng);
  f.rv = random_matrix(6, d, rng);
  return f;
}

void check_grads_equal(const AttentionGrads& a, const AttentionGrads& b) {
  CHECK(max_abs_diff(a.q, b.q) < 1e-12);
  CHECK(max_abs_diff(a.k, b.k) < 1e-12);
  CHECK(max_abs_diff(a.v, b.v) < 1e-12);
  CHECK(max_abs_diff(a.aq, b.aq) < 1e-12);
  CHECK(max_abs_diff(a.ak, b.ak) < 1e-12);
  CHECK(max_abs_diff(a.rk, b.rk) < 1e-12);
  CHECK(max_abs_diff(a.rv, b.rv) < 1e-12);
}

}  // namespace

TEST_SUITE("kernels") {
  TEST_CASE("parallel attention matches the serial reference") {
    for (bool causal : {false, true}) {
      Rng rng(causal ? 2 : 1);
      const auto f = make_fixture(rng, causal);
      const auto serial = attention_forward_serial(f.tensors(), f.args);
      const auto par = attention_forward(f.tensors(), f.args);
      CHECK(max_abs_diff(serial.z, par.z) < 1e-12);
      CHECK(serial.probs.size() == par.probs.size());

      const Matrix dz = random_matrix(serial.z.rows(), serial.z.cols(), rng);
      const Matrix dmean = random_matrix(serial.z.rows(), 7, rng);
      check_grads_equal(attention_backward_serial(f.tensors(), f.args, serial, dz, &dmean),
                        attention_backward(f.tensors(), f.args, par, dz, &dmean));
    }
  }

  TEST_CASE("probabilities are normalized and respect masks") {
    Rng rng(3);
    const auto f = make_fixture(rng, true);
    const auto fwd = attention_forward(f.tensors(), f.args);
    for (std::size_t s = 0; s < f.args.segments.size(); ++s) {
      const auto& seg = f.args.segments[s];
      for (int h = 0; h < f.args.heads; ++h) {
        for (int i = 0; i < seg.q_len; ++i) {
          double total = 0.0;
          for (int j = 0; j < seg.k_len; ++j) {
            const double p = fwd.probs[fwd.probs_offset[s] + static_cast<std::size_t>((h * seg.q_len + i) * seg.k_len + j)];
            if (j > i || !f.args.key_valid[static_cast<std::size_t>(seg.k_begin + j)]) CHECK(p == 0.0);
            total += p;
          }
          CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
        }
      }
    }
    const Matrix mean = mean_head_probs(f.args, fwd, f.q.rows(), 7);
    for (Index r = 0; r < mean.rows(); ++r) CHECK(mean.row(r).sum() == doctest::Approx(1.0));
  }

  TEST_CASE("fully masked query row is an error") {
    Rng rng(4);
    auto f = make_fixture(rng, false);
    f.args.key_valid[5] = 0;  // the one-row segment
    try {
      attention_forward(f.tensors(), f.args);
      FAIL("expected AllMasked");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kAllMasked);
    }
    f.args.key_valid[5] = 1;
    f.args.heads = 3;
    CHECK_THROWS_AS(check_attention(f.tensors(), f.args), Error);
  }

  TEST_CASE("batched GRU matches the per-sequence reference") {
    Rng rng(5);
    const int in = 4, h = 3;
    const Matrix embed = random_matrix(9, in, rng);
    const Matrix w_ih = random_matrix(in, 3 * h, rng), w_hh = random_matrix(h, 3 * h, rng);
    const Matrix b_ih = random_matrix(1, 3 * h, rng), b_hh = random_matrix(1, 3 * h, rng);
    const GruWeights w{&w_ih, &w_hh, &b_ih, &b_hh};
    std::vector<std::vector<int>> seqs;
    for (int s = 0; s < 150; ++s) {
      std::vector<int> seq(uniform_index(rng, 9));
      for (auto& id : seq) id = static_cast<int>(uniform_index(rng, 9));
      seqs.push_back(seq);
    }
    for (bool reverse : {false, true}) {
      const auto serial = gru_forward_serial(embed, seqs, w, reverse);
      const auto batched = gru_forward(embed, seqs, w, reverse);
      CHECK(max_abs_diff(serial.h_final, batched.h_final) < 1e-12);
      for (std::size_t s = 0; s < seqs.size(); ++s) {
        if (seqs[s].empty()) CHECK(batched.h_final.row(static_cast<Index>(s)).isZero());
      }
      const Matrix dh = random_matrix(static_cast<Index>(seqs.size()), h, rng);
      const auto gs = gru_backward_serial(embed, seqs, w, reverse, dh);
      const auto gb = gru_backward(embed, seqs, w, reverse, batched, dh);
      CHECK(max_abs_diff(gs.w_ih, gb.w_ih) < 1e-10);
      CHECK(max_abs_diff(gs.w_hh, gb.w_hh) < 1e-10);
      CHECK(max_abs_diff(gs.b_ih, gb.b_ih) < 1e-10);
      CHECK(max_abs_diff(gs.b_hh, gb.b_hh) < 1e-10);
      CHECK(max_abs_diff(gs.embed, gb.embed) < 1e-10);
    }
  }

  TEST_CASE("GRU two-step hand unroll") {
    // h = 1, one input feature; gates r, z, n
    Matrix embed(2, 1);
    embed << 0.5, -1.0;
    Matrix w_ih(1, 3), w_hh(1, 3), b_ih(1, 3), b_hh(1, 3);
    w_ih << 0.1, 0.2, 0.3;
    w_hh << 0.4, 0.5, 0.6;
    b_ih << 0.01, 0.02, 0.03;
    b_hh << 0.04, 0.05, 0.06;
    const GruWeights w{&w_ih, &w_hh, &b_ih, &b_hh};
    const auto sig = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
    double hv = 0.0;
    for (double x : {0.5, -1.0}) {
      const double r = sig(0.1 * x + 0.01 + 0.4 * hv + 0.04);
      const double z = sig(0.2 * x + 0.02 + 0.5 * hv + 0.05);
      const double n = std::tanh(0.3 * x + 0.03 + r * (0.6 * hv + 0.06));
      hv = (1.0 - z) * n + z * hv;
    }
    const auto fwd = gru_forward_serial(embed, {{0, 1}}, w, false);
    CHECK(fwd.h_final(0, 0) == doctest::Approx(hv).epsilon(1e-14));
    CHECK(gru_forward(embed, {{0, 1}}, w, false).h_final(0, 0) == doctest::Approx(hv).epsilon(1e-14));
  }
}
