// Serial reference kernels against their OpenMP versions.

#include <benchmark/benchmark.h>

#include "metatp/common/rng.hpp"
#include "metatp/kernels/attention.hpp"
#include "metatp/kernels/gru.hpp"

using namespace metatp;
using namespace metatp::kernels;

namespace {

Matrix random(Index r, Index c, Rng& rng) {
  Matrix m(r, c);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = 2.0 * uniform_unit(rng) - 1.0;
  return m;
}

// A packed batch of `batch` sequences of length `len` with relative ids.
struct AttentionCase {
  Matrix q, k, v, aq, ak, rk, rv, dz;
  AttentionArgs args;

  AttentionCase(int batch, int len, int d, int heads) {
    Rng rng(1);
    const Index rows = static_cast<Index>(batch) * len;
    q = random(rows, d, rng);
    k = random(rows, d, rng);
    v = random(rows, d, rng);
    aq = random(rows, d, rng);
    ak = random(rows, d, rng);
    rk = random(256, d, rng);
    rv = random(256, d, rng);
    dz = random(rows, d, rng);
    args.heads = heads;
    args.content_scale = args.abs_scale = 0.25;
    for (int s = 0; s < batch; ++s) {
      args.segments.push_back({s * len, len, s * len, len, static_cast<std::int64_t>(args.rel_ids.size())});
      for (int p = 0; p < len * len; ++p) args.rel_ids.push_back(static_cast<int>(uniform_index(rng, 256)));
    }
  }

  AttentionTensors tensors() const { return {&q, &k, &v, &aq, &ak, &rk, &rv}; }
};

template <bool Parallel>
void BM_AttentionForward(benchmark::State& state) {
  const AttentionCase c(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)), 64, 2);
  for (auto _ : state) {
    auto f = Parallel ? attention_forward(c.tensors(), c.args) : attention_forward_serial(c.tensors(), c.args);
    benchmark::DoNotOptimize(f.z.data());
  }
}

template <bool Parallel>
void BM_AttentionBackward(benchmark::State& state) {
  const AttentionCase c(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)), 64, 2);
  const auto fwd = attention_forward_serial(c.tensors(), c.args);
  for (auto _ : state) {
    auto g = Parallel ? attention_backward(c.tensors(), c.args, fwd, c.dz)
                      : attention_backward_serial(c.tensors(), c.args, fwd, c.dz);
    benchmark::DoNotOptimize(g.q.data());
  }
}

struct GruCase {
  Matrix embed, w_ih, w_hh, b_ih, b_hh, dh;
  std::vector<std::vector<int>> seqs;

  explicit GruCase(int count) {
    Rng rng(2);
    const int in = 64, h = 64;
    embed = random(100, in, rng);
    w_ih = random(in, 3 * h, rng) * 0.1;
    w_hh = random(h, 3 * h, rng) * 0.1;
    b_ih = random(1, 3 * h, rng);
    b_hh = random(1, 3 * h, rng);
    dh = random(count, h, rng);
    for (int s = 0; s < count; ++s) {
      std::vector<int> seq(1 + uniform_index(rng, 32));
      for (auto& id : seq) id = static_cast<int>(uniform_index(rng, 100));
      seqs.push_back(std::move(seq));
    }
  }

  GruWeights weights() const { return {&w_ih, &w_hh, &b_ih, &b_hh}; }
};

template <bool Parallel>
void BM_GruForward(benchmark::State& state) {
  const GruCase c(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto f = Parallel ? gru_forward(c.embed, c.seqs, c.weights(), false)
                      : gru_forward_serial(c.embed, c.seqs, c.weights(), false);
    benchmark::DoNotOptimize(f.h_final.data());
  }
}

template <bool Parallel>
void BM_GruBackward(benchmark::State& state) {
  const GruCase c(static_cast<int>(state.range(0)));
  const auto fwd = gru_forward(c.embed, c.seqs, c.weights(), false);
  for (auto _ : state) {
    auto g = Parallel ? gru_backward(c.embed, c.seqs, c.weights(), false, fwd, c.dh)
                      : gru_backward_serial(c.embed, c.seqs, c.weights(), false, c.dh);
    benchmark::DoNotOptimize(g.w_ih.data());
  }
}

}  // namespace

BENCHMARK(BM_AttentionForward<false>)->Name("attention_forward/serial")->Args({32, 64})->Args({8, 256});
BENCHMARK(BM_AttentionForward<true>)->Name("attention_forward/openmp")->Args({32, 64})->Args({8, 256});
BENCHMARK(BM_AttentionBackward<false>)->Name("attention_backward/serial")->Args({32, 64})->Args({8, 256});
BENCHMARK(BM_AttentionBackward<true>)->Name("attention_backward/openmp")->Args({32, 64})->Args({8, 256});
BENCHMARK(BM_GruForward<false>)->Name("gru_forward/serial")->Arg(512)->Arg(4096);
BENCHMARK(BM_GruForward<true>)->Name("gru_forward/openmp")->Arg(512)->Arg(4096);
BENCHMARK(BM_GruBackward<false>)->Name("gru_backward/serial")->Arg(512)->Arg(4096);
BENCHMARK(BM_GruBackward<true>)->Name("gru_backward/openmp")->Arg(512)->Arg(4096);

BENCHMARK_MAIN();
