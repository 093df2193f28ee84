#pragma once

#include <vector>

#include "metatp/nn/autograd.hpp"

namespace metatp::kernels {

using nn::Index;
using nn::Matrix;

// Single-layer GRU, gates ordered [r | z | n] along columns:
//   r = σ(x W_ir + b_ir + h W_hr + b_hr)
//   z = σ(x W_iz + b_iz + h W_hz + b_hz)
//   n = tanh(x W_in + b_in + r ⊙ (h W_hn + b_hn))
//   h' = (1 - z) ⊙ n + z ⊙ h
struct GruWeights {
  const Matrix* w_ih = nullptr;  // in x 3h
  const Matrix* w_hh = nullptr;  // h x 3h
  const Matrix* b_ih = nullptr;  // 1 x 3h
  const Matrix* b_hh = nullptr;  // 1 x 3h
};

struct GruGrads {
  Matrix w_ih, w_hh, b_ih, b_hh;
  Matrix embed;  // same shape as the embedding table
};

struct GruStep {
  Matrix h_prev, r, z, n, hn;
};

struct GruBlock {
  std::vector<int> order;  // sequence indices, longest first
  std::vector<GruStep> steps;
};

struct GruForward {
  Matrix h_final;  // sequences x h; zero for empty sequences
  std::vector<GruBlock> blocks;
};

// Each sequence is a list of row ids into `embed`. With reverse the
// recurrence reads the sequence right to left.
GruForward gru_forward_serial(const Matrix& embed, const std::vector<std::vector<int>>& seqs, const GruWeights& w,
                              bool reverse);
GruGrads gru_backward_serial(const Matrix& embed, const std::vector<std::vector<int>>& seqs, const GruWeights& w,
                             bool reverse, const Matrix& dh_final);

// Batched over blocks of kGruBlock sequences sorted by length; blocks run in
// parallel and their gradients are summed in block order.
inline constexpr int kGruBlock = 64;
GruForward gru_forward(const Matrix& embed, const std::vector<std::vector<int>>& seqs, const GruWeights& w,
                       bool reverse);
GruGrads gru_backward(const Matrix& embed, const std::vector<std::vector<int>>& seqs, const GruWeights& w,
                      bool reverse, const GruForward& fwd, const Matrix& dh_final);

}  // namespace metatp::kernels
