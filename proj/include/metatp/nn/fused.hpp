#pragma once

#include <vector>

#include "metatp/kernels/attention.hpp"
#include "metatp/kernels/gru.hpp"
#include "metatp/nn/autograd.hpp"

namespace metatp::nn {

enum class KernelMode { kParallel, kSerial };

// Process-wide choice between the OpenMP kernels and their serial
// references. Both produce the same values up to rounding.
void set_kernel_mode(KernelMode mode);
KernelMode kernel_mode();

// Unset members are treated as absent terms.
struct AttentionInputs {
  Var q, k, v;
  Var aq, ak;  // absolute term, row-aligned with q and k
  Var rk, rv;  // relative tables indexed by args.rel_ids
};

struct AttentionOutput {
  Var z;
  Var mean_probs;  // set when requested: query rows x probs_width
};

AttentionOutput fused_attention(const AttentionInputs& inputs, kernels::AttentionArgs args, Index probs_width = 0);

struct GruParams {
  Var w_ih, w_hh, b_ih, b_hh;
};

// Final hidden states (sequences x h) of a GRU over embedding rows. Row
// `frozen_row` of the embedding never receives gradient.
Var gru_final_states(const Var& embed, const GruParams& params, std::vector<std::vector<int>> seqs, bool reverse,
                     int frozen_row = 0);

}  // namespace metatp::nn
