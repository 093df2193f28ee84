#include "metatp/model/layers.hpp"

#include <cmath>

#include "metatp/common/error.hpp"
#include "metatp/nn/fused.hpp"
#include "metatp/nn/ops.hpp"

namespace metatp::model {

Var LayerNormParams::operator()(const Var& x) const { return nn::layer_norm(x, gamma, beta); }

LayerNormParams make_layer_norm(nn::ParameterStore& store, const std::string& prefix, int d) {
  return {store.add(prefix + ".gamma", Matrix::Ones(1, d)), store.add(prefix + ".beta", Matrix::Zero(1, d))};
}

Var FeedForward::operator()(const Var& x, double dropout, Rng& rng, bool training) const {
  Var h = nn::relu(nn::linear(x, w1, b1));
  return nn::linear(nn::dropout(h, dropout, rng, training), w2, b2);
}

FeedForward make_feed_forward(nn::ParameterStore& store, const std::string& prefix, int d, int ffn_dim, Rng& rng) {
  FeedForward f;
  f.w1 = store.add(prefix + ".w1", nn::xavier_uniform(d, ffn_dim, rng));
  f.b1 = store.add(prefix + ".b1", Matrix::Zero(1, ffn_dim));
  f.w2 = store.add(prefix + ".w2", nn::xavier_uniform(ffn_dim, d, rng));
  f.b2 = store.add(prefix + ".b2", Matrix::Zero(1, d));
  return f;
}

Matrix sinusoidal_positions(int n, int d, int first) {
  Matrix m(n, d);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < d; ++k) {
      const double rate = std::pow(10000.0, -static_cast<double>(2 * (k / 2)) / d);
      const double angle = (first + i) * rate;
      m(i, k) = k % 2 == 0 ? std::sin(angle) : std::cos(angle);
    }
  }
  return m;
}

Encoder::Encoder(nn::ParameterStore& store, const std::string& prefix, const EncoderConfig& config, Rng& rng)
    : config_(config) {
  if (config.heads < 1 || config.d % config.heads != 0) {
    throw Error(ErrorCode::kConfig, "model.heads must divide model.d");
  }
  for (int l = 0; l < config.layers; ++l) {
    const std::string p = prefix + ".layer" + std::to_string(l);
    EncoderLayer layer;
    layer.weights = make_static_weight_set(store, p + ".attn", config.d, rng);
    layer.wo = store.add(p + ".attn.W_O", nn::xavier_uniform(config.d, config.d, rng));
    layer.bo = store.add(p + ".attn.b_O", Matrix::Zero(1, config.d));
    layer.ln_attn = make_layer_norm(store, p + ".ln_attn", config.d);
    layer.ln_ffn = make_layer_norm(store, p + ".ln_ffn", config.d);
    layer.ffn = make_feed_forward(store, p + ".ffn", config.d, config.ffn_dim, rng);
    layers_.push_back(std::move(layer));
  }
  final_ln_ = make_layer_norm(store, prefix + ".ln_final", config.d);
}

Var Encoder::forward(const Var& x, const PackedLayout& layout, const AttentionSources& sources,
                     const std::vector<std::vector<AttentionWeightSet>>& layer_sets, bool training, Rng& rng) const {
  if (!layer_sets.empty() && layer_sets.size() != layers_.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "one weight-set list per encoder layer expected");
  }
  Var h = x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    const std::vector<AttentionWeightSet> statics{layer.weights};
    const auto& sets = layer_sets.empty() ? statics : layer_sets[l];
    Var a = attend_packed(config_.variant, layer.ln_attn(h), sets, layout, sources, config_.heads);
    h = nn::add(h, nn::dropout(nn::linear(a, layer.wo, layer.bo), config_.dropout, rng, training));
    Var f = layer.ffn(layer.ln_ffn(h), config_.dropout, rng, training);
    h = nn::add(h, nn::dropout(f, config_.dropout, rng, training));
  }
  return layers_.empty() ? h : final_ln_(h);
}

Decoder::Decoder(nn::ParameterStore& store, const std::string& prefix, int d, int heads, int layers, int ffn_dim,
                 double dropout, Rng& rng)
    : d_(d), heads_(heads), dropout_(dropout) {
  if (heads < 1 || d % heads != 0) throw Error(ErrorCode::kConfig, "model.heads must divide model.d");
  for (int l = 0; l < layers; ++l) {
    const std::string p = prefix + ".layer" + std::to_string(l);
    DecoderLayer layer;
    layer.wq = store.add(p + ".self.W_Q", nn::xavier_uniform(d, d, rng));
    layer.wk = store.add(p + ".self.W_K", nn::xavier_uniform(d, d, rng));
    layer.wv = store.add(p + ".self.W_V", nn::xavier_uniform(d, d, rng));
    layer.wo = store.add(p + ".self.W_O", nn::xavier_uniform(d, d, rng));
    layer.bo = store.add(p + ".self.b_O", Matrix::Zero(1, d));
    layer.cq = store.add(p + ".cross.W_Q", nn::xavier_uniform(d, d, rng));
    layer.ck = store.add(p + ".cross.W_K", nn::xavier_uniform(d, d, rng));
    layer.cv = store.add(p + ".cross.W_V", nn::xavier_uniform(d, d, rng));
    layer.co = store.add(p + ".cross.W_O", nn::xavier_uniform(d, d, rng));
    layer.cbo = store.add(p + ".cross.b_O", Matrix::Zero(1, d));
    layer.ln_self = make_layer_norm(store, p + ".ln_self", d);
    layer.ln_cross = make_layer_norm(store, p + ".ln_cross", d);
    layer.ln_ffn = make_layer_norm(store, p + ".ln_ffn", d);
    layer.ffn = make_feed_forward(store, p + ".ffn", d, ffn_dim, rng);
    layers_.push_back(std::move(layer));
  }
  final_ln_ = make_layer_norm(store, prefix + ".ln_final", d);
}

DecoderOutput Decoder::forward(const Var& y, const PackedLayout& target, const Var& memory,
                               const PackedLayout& source, bool training, Rng& rng) const {
  if (target.sequences() != source.sequences()) throw Error(ErrorCode::kDimensionMismatch, "decoder: batch sizes differ");
  const double scale = 1.0 / std::sqrt(static_cast<double>(d_ / heads_));
  kernels::AttentionArgs self_args;
  self_args.heads = heads_;
  self_args.content_scale = scale;
  self_args.causal = true;
  kernels::AttentionArgs cross_args;
  cross_args.heads = heads_;
  cross_args.content_scale = scale;
  cross_args.key_valid = source.key_valid;
  int max_source = 0;
  for (int s = 0; s < target.sequences(); ++s) {
    const auto k = static_cast<std::size_t>(s);
    self_args.segments.push_back({target.begin[k], target.length[k], target.begin[k], target.length[k], -1});
    cross_args.segments.push_back({target.begin[k], target.length[k], source.begin[k], source.length[k], -1});
    max_source = std::max(max_source, source.length[k]);
  }

  DecoderOutput out;
  Var h = y;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    Var n1 = layer.ln_self(h);
    nn::AttentionInputs self_in;
    self_in.q = nn::matmul(n1, layer.wq);
    self_in.k = nn::matmul(n1, layer.wk);
    self_in.v = nn::matmul(n1, layer.wv);
    Var a = nn::fused_attention(self_in, self_args).z;
    h = nn::add(h, nn::dropout(nn::linear(a, layer.wo, layer.bo), dropout_, rng, training));

    Var n2 = layer.ln_cross(h);
    nn::AttentionInputs cross_in;
    cross_in.q = nn::matmul(n2, layer.cq);
    cross_in.k = nn::matmul(memory, layer.ck);
    cross_in.v = nn::matmul(memory, layer.cv);
    const bool last = l + 1 == layers_.size();
    auto c = nn::fused_attention(cross_in, cross_args, last ? max_source : 0);
    if (last) out.copy_probs = c.mean_probs;
    h = nn::add(h, nn::dropout(nn::linear(c.z, layer.co, layer.cbo), dropout_, rng, training));

    Var f = layer.ffn(layer.ln_ffn(h), dropout_, rng, training);
    h = nn::add(h, nn::dropout(f, dropout_, rng, training));
  }
  out.hidden = final_ln_(h);
  return out;
}

DecoderState Decoder::start(const Matrix& memory, int bos_id) const {
  DecoderState st;
  st.prefix.push_back(bos_id);
  for (const auto& layer : layers_) {
    st.self_k.emplace_back(0, d_);
    st.self_v.emplace_back(0, d_);
    st.cross_k.push_back(memory * layer.ck.value());
    st.cross_v.push_back(memory * layer.cv.value());
  }
  return st;
}

std::pair<Matrix, Matrix> Decoder::step(DecoderState& st, const Matrix& x) const {
  nn::NoGradGuard guard;
  const double scale = 1.0 / std::sqrt(static_cast<double>(d_ / heads_));
  Rng unused(0);
  Var h = nn::constant(x);
  Matrix copy;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    Var n1 = layer.ln_self(h);
    auto append = [](Matrix& cache, const Matrix& row) {
      cache.conservativeResize(cache.rows() + 1, Eigen::NoChange);
      cache.row(cache.rows() - 1) = row;
    };
    append(st.self_k[l], nn::matmul(n1, layer.wk).value());
    append(st.self_v[l], nn::matmul(n1, layer.wv).value());
    kernels::AttentionArgs self_args;
    self_args.heads = heads_;
    self_args.content_scale = scale;
    const int t = static_cast<int>(st.self_k[l].rows());
    self_args.segments.push_back({0, 1, 0, t, -1});
    nn::AttentionInputs self_in;
    self_in.q = nn::matmul(n1, layer.wq);
    self_in.k = nn::constant(st.self_k[l]);
    self_in.v = nn::constant(st.self_v[l]);
    Var a = nn::fused_attention(self_in, self_args).z;
    h = nn::add(h, nn::linear(a, layer.wo, layer.bo));

    Var n2 = layer.ln_cross(h);
    kernels::AttentionArgs cross_args;
    cross_args.heads = heads_;
    cross_args.content_scale = scale;
    const int src = static_cast<int>(st.cross_k[l].rows());
    cross_args.segments.push_back({0, 1, 0, src, -1});
    nn::AttentionInputs cross_in;
    cross_in.q = nn::matmul(n2, layer.cq);
    cross_in.k = nn::constant(st.cross_k[l]);
    cross_in.v = nn::constant(st.cross_v[l]);
    const bool last = l + 1 == layers_.size();
    auto c = nn::fused_attention(cross_in, cross_args, last ? src : 0);
    if (last) copy = c.mean_probs.value();
    h = nn::add(h, nn::linear(c.z, layer.co, layer.cbo));
    h = nn::add(h, layer.ffn(layer.ln_ffn(h), 0.0, unused, false));
  }
  return {final_ln_(h).value(), copy};
}

}  // namespace metatp::model
