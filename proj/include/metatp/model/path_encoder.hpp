#pragma once

#include <string>
#include <vector>

#include "metatp/corpus/path_table.hpp"
#include "metatp/nn/fused.hpp"
#include "metatp/nn/parameters.hpp"

namespace metatp::model {

using nn::Index;
using nn::Matrix;
using nn::Var;

struct PathEncoderConfig {
  int num_node_types = 0;  // includes <PAD>=0 and <UNK>=1
  int node_dim = 64;
  int hidden = 64;
  int d = 64;
  int max_length = 32;
};

// Node-type embedding, one bidirectional GRU layer and a 2h -> d projection.
// Trailing <PAD> ids are ignored; the empty path encodes to exactly zero.
class PathEncoder {
 public:
  PathEncoder(nn::ParameterStore& store, const std::string& prefix, const PathEncoderConfig& config, Rng& rng);

  // Batched, differentiable. Row k encodes paths[k].
  Var encode(const std::vector<std::vector<int>>& paths) const;

  // Reference per-path encoder; no graph is recorded.
  Eigen::RowVectorXd encode_path(const std::vector<int>& node_ids) const;
  Matrix encode_path_table(const corpus::PathTable& table) const;

  const PathEncoderConfig& config() const { return config_; }
  const Var& embedding() const { return embed_; }
  const nn::GruParams& forward_gru() const { return fwd_; }
  const nn::GruParams& backward_gru() const { return bwd_; }
  const Var& proj_w() const { return proj_w_; }
  const Var& proj_b() const { return proj_b_; }

 private:
  // Validates ids and strips trailing padding.
  std::vector<int> prepare(const std::vector<int>& node_ids) const;

  PathEncoderConfig config_;
  Var embed_;
  nn::GruParams fwd_;
  nn::GruParams bwd_;
  Var proj_w_;
  Var proj_b_;
};

}  // namespace metatp::model
