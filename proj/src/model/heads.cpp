#include "metatp/model/heads.hpp"

#include "metatp/common/error.hpp"
#include "metatp/corpus/vocabulary.hpp"
#include "metatp/nn/ops.hpp"

namespace metatp::model {

Var pointer_mix(const Var& vocab_dist, const Var& copy_attn, const std::vector<int>& input_ids, const Var& gate) {
  if (gate.cols() != 1 || gate.rows() != vocab_dist.rows() || copy_attn.rows() != vocab_dist.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "pointer_mix: row counts differ");
  }
  Var copied = nn::scatter_columns(copy_attn, input_ids, vocab_dist.cols());
  return nn::add(nn::mul_col(vocab_dist, gate), nn::mul_col(copied, nn::one_minus(gate)));
}

Var completion_logits(const Var& encoder_output, int mask_position, const std::vector<int>& input_ids, const Var& w,
                      const Var& b) {
  if (mask_position < 0 || mask_position >= encoder_output.rows() ||
      static_cast<std::size_t>(mask_position) >= input_ids.size() ||
      input_ids[static_cast<std::size_t>(mask_position)] != corpus::special::kMask) {
    throw Error(ErrorCode::kBadMaskPosition, "position " + std::to_string(mask_position) + " does not hold <MASK>");
  }
  return nn::linear(nn::slice_rows(encoder_output, mask_position, 1), w, b);
}

Var sequence_loss(const Var& pred_dists, const std::vector<int>& targets) { return nn::nll_of_probs(pred_dists, targets); }

Var completion_loss(const Var& logits, const std::vector<int>& answers) { return nn::cross_entropy(logits, answers); }

std::vector<int> greedy_decode(const std::function<Eigen::RowVectorXd(int, int)>& next, int bos_id, int eos_id,
                               int max_len) {
  std::vector<int> out;
  int token = bos_id;
  for (int pos = 0; pos < max_len; ++pos) {
    const Eigen::RowVectorXd dist = next(token, pos);
    Index best = 0;
    for (Index v = 1; v < dist.size(); ++v)
      if (dist(v) > dist(best)) best = v;  // first maximum wins
    token = static_cast<int>(best);
    if (token == eos_id) break;
    out.push_back(token);
  }
  return out;
}

}  // namespace metatp::model
