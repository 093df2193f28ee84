#pragma once

#include <cstdint>
#include <vector>

#include "metatp/nn/autograd.hpp"

namespace metatp::kernels {

using nn::Index;
using nn::Matrix;

// One attention problem inside a packed batch: query rows
// [q_begin, q_begin + q_len) attend to key rows [k_begin, k_begin + k_len).
// rel_begin points at q_len * k_len row ids (row-major) into the rk/rv
// tables, or is -1 when the segment has no relative term.
struct AttentionSegment {
  int q_begin = 0;
  int q_len = 0;
  int k_begin = 0;
  int k_len = 0;
  std::int64_t rel_begin = -1;
};

// Scores per head h:
//   s_ij = content_scale * q_i·(k_j + rk[id_ij]) + abs_scale * aq_i·ak_j
// and z_i = sum_j softmax(s)_ij (v_j + rv[id_ij]). Id -1 is a zero row.
struct AttentionArgs {
  int heads = 1;
  double content_scale = 1.0;
  double abs_scale = 1.0;
  bool causal = false;  // key j visible to query i iff j <= i + (k_len - q_len)
  std::vector<AttentionSegment> segments;
  std::vector<int> rel_ids;
  std::vector<std::uint8_t> key_valid;  // per key row; empty means all valid
};

// Non-owning. q, k, v are required; the others may be null.
struct AttentionTensors {
  const Matrix* q = nullptr;
  const Matrix* k = nullptr;
  const Matrix* v = nullptr;
  const Matrix* aq = nullptr;
  const Matrix* ak = nullptr;
  const Matrix* rk = nullptr;
  const Matrix* rv = nullptr;
};

struct AttentionForward {
  Matrix z;
  std::vector<double> probs;              // per segment: heads x q_len x k_len
  std::vector<std::size_t> probs_offset;  // per segment
};

struct AttentionGrads {
  Matrix q, k, v, aq, ak, rk, rv;  // empty when the input was null
};

// Throws Error(kAllMasked) when some query row sees no valid key and
// Error(kDimensionMismatch) on inconsistent shapes.
void check_attention(const AttentionTensors& t, const AttentionArgs& args);

AttentionForward attention_forward_serial(const AttentionTensors& t, const AttentionArgs& args);
AttentionGrads attention_backward_serial(const AttentionTensors& t, const AttentionArgs& args,
                                         const AttentionForward& fwd, const Matrix& dz,
                                         const Matrix* dmean_probs = nullptr);

// OpenMP over (segment, head). Table gradients are reduced serially in pair
// order so results do not depend on the thread count.
AttentionForward attention_forward(const AttentionTensors& t, const AttentionArgs& args);
// dmean_probs, when given, is the gradient of mean_head_probs' output.
AttentionGrads attention_backward(const AttentionTensors& t, const AttentionArgs& args, const AttentionForward& fwd,
                                  const Matrix& dz, const Matrix* dmean_probs = nullptr);

// Head-averaged probabilities, one row per query row, padded to `width`.
Matrix mean_head_probs(const AttentionArgs& args, const AttentionForward& fwd, Index rows, Index width);

}  // namespace metatp::kernels
