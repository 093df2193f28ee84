#pragma once

#include <functional>
#include <vector>

#include "metatp/nn/autograd.hpp"

namespace metatp::model {

using nn::Index;
using nn::Matrix;
using nn::Var;

// out(t, v) = g(t) vocab(t, v) + (1 - g(t)) sum_{i : ids(t, i) = v} copy(t, i)
// ids is row-major rows(copy) x cols(copy); negative ids are ignored.
Var pointer_mix(const Var& vocab_dist, const Var& copy_attn, const std::vector<int>& input_ids, const Var& gate);

// Affine map of the encoder row at mask_position to vocabulary logits
// (1 x |V|). Throws Error(kBadMaskPosition) unless input_ids holds <MASK>
// at that position.
Var completion_logits(const Var& encoder_output, int mask_position, const std::vector<int>& input_ids, const Var& w,
                      const Var& b);

// Mean NLL of target rows under per-row distributions; targets < 0 are padding.
Var sequence_loss(const Var& pred_dists, const std::vector<int>& targets);
// Mean cross-entropy of logits rows against answers.
Var completion_loss(const Var& logits, const std::vector<int>& answers);

// Step-by-step argmax until <EOS> or max_len tokens. `next` receives the
// previous token and its position and returns a distribution over the
// vocabulary. <EOS> itself is not part of the result.
std::vector<int> greedy_decode(const std::function<Eigen::RowVectorXd(int token, int position)>& next, int bos_id,
                               int eos_id, int max_len);

}  // namespace metatp::model
