#pragma once

#include <string>
#include <vector>

#include "metatp/model/attention.hpp"

namespace metatp::model {

struct LayerNormParams {
  Var gamma, beta;
  Var operator()(const Var& x) const;
};
LayerNormParams make_layer_norm(nn::ParameterStore& store, const std::string& prefix, int d);

struct FeedForward {
  Var w1, b1, w2, b2;
  Var operator()(const Var& x, double dropout, Rng& rng, bool training) const;
};
FeedForward make_feed_forward(nn::ParameterStore& store, const std::string& prefix, int d, int ffn_dim, Rng& rng);

// Sinusoidal position encodings for positions [0, n).
Matrix sinusoidal_positions(int n, int d, int first = 0);

struct EncoderConfig {
  Variant variant = Variant::kTPTrans;
  int d = 64;
  int heads = 2;
  int layers = 2;
  int ffn_dim = 256;
  double dropout = 0.0;
};

struct EncoderLayer {
  AttentionWeightSet weights;  // static set
  Var wo, bo;
  LayerNormParams ln_attn, ln_ffn;
  FeedForward ffn;
};

// Pre-norm residual stack:
//   x += drop(attn(ln(x)) Wo + bo);  x += drop(ffn(ln(x)))
// followed by a final layer norm when there is at least one layer.
class Encoder {
 public:
  Encoder(nn::ParameterStore& store, const std::string& prefix, const EncoderConfig& config, Rng& rng);

  // layer_sets[l] holds one weight set per layout group; an empty outer
  // vector means the static sets everywhere.
  Var forward(const Var& x, const PackedLayout& layout, const AttentionSources& sources,
              const std::vector<std::vector<AttentionWeightSet>>& layer_sets, bool training, Rng& rng) const;

  const EncoderConfig& config() const { return config_; }
  const std::vector<EncoderLayer>& layers() const { return layers_; }

 private:
  EncoderConfig config_;
  std::vector<EncoderLayer> layers_;
  LayerNormParams final_ln_;
};

struct DecoderLayer {
  Var wq, wk, wv, wo, bo;      // causal self-attention
  Var cq, ck, cv, co, cbo;     // cross-attention over encoder memory
  LayerNormParams ln_self, ln_cross, ln_ffn;
  FeedForward ffn;
};

struct DecoderOutput {
  Var hidden;      // target rows x d, after the final norm
  Var copy_probs;  // target rows x max source length: last layer's cross-attention averaged over heads
};

// Cached keys and values of one decoding stream.
struct DecoderState {
  std::vector<int> prefix;  // starts with <BOS>
  std::vector<Matrix> self_k, self_v;    // per layer, prefix length x d
  std::vector<Matrix> cross_k, cross_v;  // per layer, source length x d
};

class Decoder {
 public:
  Decoder(nn::ParameterStore& store, const std::string& prefix, int d, int heads, int layers, int ffn_dim,
          double dropout, Rng& rng);

  // y: packed target-side inputs (position encodings already added), one
  // segment per sample in `target`; memory rows follow `source`.
  DecoderOutput forward(const Var& y, const PackedLayout& target, const Var& memory, const PackedLayout& source,
                        bool training, Rng& rng) const;

  // Starts a stream over one sample's memory (rows x d), no graph.
  DecoderState start(const Matrix& memory, int bos_id) const;
  // Feeds one embedded input row (1 x d, positions added) and appends its
  // keys/values. Returns the final hidden row and the copy distribution.
  std::pair<Matrix, Matrix> step(DecoderState& state, const Matrix& x) const;

  int layers() const { return static_cast<int>(layers_.size()); }
  int heads() const { return heads_; }

 private:
  int d_;
  int heads_;
  double dropout_;
  std::vector<DecoderLayer> layers_;
  LayerNormParams final_ln_;
};

}  // namespace metatp::model
