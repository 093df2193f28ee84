#include "metatp/model/path_encoder.hpp"

#include "metatp/common/error.hpp"
#include "metatp/corpus/vocabulary.hpp"
#include "metatp/nn/ops.hpp"

namespace metatp::model {
namespace {

nn::GruParams make_gru(nn::ParameterStore& store, const std::string& prefix, int in, int h, Rng& rng) {
  nn::GruParams p;
  p.w_ih = store.add(prefix + ".w_ih", nn::xavier_uniform(in, 3 * h, rng));
  p.w_hh = store.add(prefix + ".w_hh", nn::xavier_uniform(h, 3 * h, rng));
  p.b_ih = store.add(prefix + ".b_ih", Matrix::Zero(1, 3 * h));
  p.b_hh = store.add(prefix + ".b_hh", Matrix::Zero(1, 3 * h));
  return p;
}

kernels::GruWeights weights(const nn::GruParams& p) {
  return {&p.w_ih.value(), &p.w_hh.value(), &p.b_ih.value(), &p.b_hh.value()};
}

}  // namespace

PathEncoder::PathEncoder(nn::ParameterStore& store, const std::string& prefix, const PathEncoderConfig& config,
                         Rng& rng)
    : config_(config) {
  if (config.num_node_types < 2 || config.node_dim < 1 || config.hidden < 1 || config.d < 1) {
    throw Error(ErrorCode::kConfig, "path encoder: bad dimensions");
  }
  Matrix e = nn::normal(config.num_node_types, config.node_dim, 1.0 / std::sqrt(config.node_dim), rng);
  e.row(corpus::special::kPad).setZero();
  embed_ = store.add(prefix + ".node_embedding", std::move(e));
  fwd_ = make_gru(store, prefix + ".gru_fwd", config.node_dim, config.hidden, rng);
  bwd_ = make_gru(store, prefix + ".gru_bwd", config.node_dim, config.hidden, rng);
  proj_w_ = store.add(prefix + ".proj.w", nn::xavier_uniform(2 * config.hidden, config.d, rng));
  proj_b_ = store.add(prefix + ".proj.b", Matrix::Zero(1, config.d));
}

std::vector<int> PathEncoder::prepare(const std::vector<int>& node_ids) const {
  std::size_t len = node_ids.size();
  while (len > 0 && node_ids[len - 1] == corpus::special::kPad) --len;
  if (len > static_cast<std::size_t>(config_.max_length)) {
    throw Error(ErrorCode::kPathTooLong, "path of length " + std::to_string(len) + " exceeds " +
                                             std::to_string(config_.max_length));
  }
  for (std::size_t i = 0; i < len; ++i) {
    if (node_ids[i] < 0 || node_ids[i] >= config_.num_node_types) {
      throw Error(ErrorCode::kUnknownNodeType, "node type id " + std::to_string(node_ids[i]));
    }
  }
  return {node_ids.begin(), node_ids.begin() + static_cast<std::ptrdiff_t>(len)};
}

Var PathEncoder::encode(const std::vector<std::vector<int>>& paths) const {
  std::vector<std::vector<int>> seqs;
  seqs.reserve(paths.size());
  Matrix nonempty(static_cast<Index>(paths.size()), 1);
  for (std::size_t i = 0; i < paths.size(); ++i) {
    seqs.push_back(prepare(paths[i]));
    nonempty(static_cast<Index>(i), 0) = seqs.back().empty() ? 0.0 : 1.0;
  }
  Var hf = nn::gru_final_states(embed_, fwd_, seqs, /*reverse=*/false, corpus::special::kPad);
  Var hb = nn::gru_final_states(embed_, bwd_, std::move(seqs), /*reverse=*/true, corpus::special::kPad);
  Var out = nn::linear(nn::concat_cols({hf, hb}), proj_w_, proj_b_);
  return nn::mul_col(out, nn::constant(std::move(nonempty)));
}

Eigen::RowVectorXd PathEncoder::encode_path(const std::vector<int>& node_ids) const {
  const std::vector<std::vector<int>> seq{prepare(node_ids)};
  if (seq[0].empty()) return Eigen::RowVectorXd::Zero(config_.d);
  const Matrix hf = kernels::gru_forward_serial(embed_.value(), seq, weights(fwd_), false).h_final;
  const Matrix hb = kernels::gru_forward_serial(embed_.value(), seq, weights(bwd_), true).h_final;
  Eigen::RowVectorXd cat(2 * config_.hidden);
  cat << hf.row(0), hb.row(0);
  return cat * proj_w_.value() + proj_b_.value().row(0);
}

Matrix PathEncoder::encode_path_table(const corpus::PathTable& table) const {
  if (table.size() == 0) throw Error(ErrorCode::kEmptyCorpus, "empty path table");
  nn::NoGradGuard guard;
  return encode(table.entries()).value();
}

}  // namespace metatp::model
