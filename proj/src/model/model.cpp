#include "metatp/model/model.hpp"

#include <cmath>

#include "metatp/common/error.hpp"
#include "metatp/corpus/vocabulary.hpp"
#include "metatp/model/heads.hpp"
#include "metatp/nn/ops.hpp"

namespace metatp::model {

void ModelConfig::validate() const {
  const auto fail = [](const std::string& what) { throw Error(ErrorCode::kConfig, what); };
  if (vocab_size <= corpus::special::kName) fail("vocabulary too small");
  if (num_languages < 1) fail("no languages");
  if (d < 1 || word_dim < 1 || ffn_dim < 1 || layers < 0 || decoder_layers < 0) fail("model dimensions must be positive");
  if (heads < 1 || d % heads != 0) {
    fail("model.heads (" + std::to_string(heads) + ") must divide model.d (" + std::to_string(d) + ")");
  }
  if (dropout < 0.0 || dropout >= 1.0) fail("model.dropout must be in [0, 1)");
  if (scheme != Scheme::kNone && variant != Variant::kTPTrans) fail("meta.scheme requires model.variant tptrans");
  if (scheme != Scheme::kNone && (d_t < 1 || d_p < 1)) fail("d_T and d_P must be positive");
  if (variant == Variant::kTPTrans && (num_node_types < 2 || node_dim < 1 || path_hidden < 1)) fail("path encoder dimensions");
  if (task == corpus::Task::kSummarization && decoder_layers < 1) fail("summarization needs a decoder layer");
  if (max_decode < 1) fail("max_decode must be positive");
}

Model::Model(const ModelConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  Rng rng(mix_seed(seed));
  Matrix words = nn::normal(config.vocab_size, config.word_dim, 1.0 / std::sqrt(config.word_dim), rng);
  words.row(corpus::special::kPad).setZero();
  word_embedding_ = params_.add("word_embedding", std::move(words));
  word_proj_w_ = params_.add("word_proj.w", nn::xavier_uniform(config.word_dim, config.d, rng));
  word_proj_b_ = params_.add("word_proj.b", Matrix::Zero(1, config.d));

  if (config.variant == Variant::kTPTrans) {
    PathEncoderConfig pc{config.num_node_types, config.node_dim, config.path_hidden, config.d, 32};
    rel_paths_ = std::make_unique<PathEncoder>(params_, config.shared_path_encoder ? "path" : "path_rel", pc, rng);
    if (!config.shared_path_encoder) abs_paths_ = std::make_unique<PathEncoder>(params_, "path_abs", pc, rng);
  }
  if (config.variant == Variant::kAbsPos || config.variant == Variant::kRelPos) {
    positions_ = make_position_tables(params_, "positions", config.d, config.max_positions, rng);
  }
  if (config.scheme != Scheme::kNone) {
    MetaConfig mc{config.scheme, config.num_languages, config.d, config.d_t, config.d_p, config.layers};
    meta_ = std::make_unique<MetaLearner>(params_, "meta", mc, rng);
  }
  EncoderConfig ec{config.variant, config.d, config.heads, config.layers, config.ffn_dim, config.dropout};
  encoder_ = std::make_unique<Encoder>(params_, "encoder", ec, rng);
  if (config.task == corpus::Task::kSummarization) {
    decoder_ = std::make_unique<Decoder>(params_, "decoder", config.d, config.heads, config.decoder_layers,
                                         config.ffn_dim, config.dropout, rng);
    if (config.pointer) {
      gate_w_ = params_.add("pointer.w", nn::xavier_uniform(config.d, 1, rng));
      gate_b_ = params_.add("pointer.b", Matrix::Zero(1, 1));
    }
  }
  out_w_ = params_.add("output.w", nn::xavier_uniform(config.d, config.vocab_size, rng));
  out_b_ = params_.add("output.b", Matrix::Zero(1, config.vocab_size));
}

BatchOptions Model::batch_options() const {
  BatchOptions o;
  o.paths = config_.variant == Variant::kTPTrans;
  o.group_by_language = config_.scheme != Scheme::kNone;
  return o;
}

Var Model::embed_tokens(const std::vector<int>& ids) const {
  for (int id : ids) {
    if (id < 0 || id >= config_.vocab_size) throw Error(ErrorCode::kIndex, "subtoken id " + std::to_string(id) + " out of range");
  }
  return nn::linear(nn::gather_rows(word_embedding_, ids, corpus::special::kPad), word_proj_w_, word_proj_b_);
}

Var Model::encode(const Batch& batch, bool training, Rng& rng) const {
  Var x = embed_tokens(batch.tokens);
  AttentionSources src;
  if (config_.variant == Variant::kVanilla) {
    Matrix pe(static_cast<Index>(batch.tokens.size()), config_.d);
    const Matrix table = sinusoidal_positions(config_.max_positions, config_.d);
    for (std::size_t r = 0; r < batch.positions.size(); ++r) pe.row(static_cast<Index>(r)) = table.row(batch.positions[r]);
    x = nn::add(x, nn::constant(std::move(pe)));
  } else if (positions_) {
    src.positions = &*positions_;
  } else if (rel_paths_) {
    if (batch.rel_path_list.empty()) throw Error(ErrorCode::kDimensionMismatch, "batch was built without paths");
    if (abs_paths_) {
      src.r_table = rel_paths_->encode(batch.rel_path_list);
      src.a = nn::gather_rows(abs_paths_->encode(batch.abs_path_list), batch.abs_rows);
    } else {
      std::vector<std::vector<int>> all = batch.rel_path_list;
      all.insert(all.end(), batch.abs_path_list.begin(), batch.abs_path_list.end());
      const Var enc = rel_paths_->encode(all);
      const auto n_rel = static_cast<Index>(batch.rel_path_list.size());
      src.r_table = nn::slice_rows(enc, 0, n_rel);
      src.a = nn::gather_rows(nn::slice_rows(enc, n_rel, enc.rows() - n_rel), batch.abs_rows);
    }
  }
  x = nn::dropout(x, config_.dropout, rng, training);

  std::vector<std::vector<AttentionWeightSet>> layer_sets;
  if (meta_) {
    if (batch.group_language.empty()) throw Error(ErrorCode::kDimensionMismatch, "batch was built without language groups");
    std::vector<Var> p;
    for (int lang : batch.group_language) p.push_back(meta_->project_language(lang));
    layer_sets.resize(static_cast<std::size_t>(config_.layers));
    for (int l = 0; l < config_.layers; ++l) {
      for (const Var& pg : p) {
        layer_sets[static_cast<std::size_t>(l)].push_back(
            meta_->weight_set_for(l, pg, encoder_->layers()[static_cast<std::size_t>(l)].weights));
      }
    }
  }
  return encoder_->forward(x, batch.layout, src, layer_sets, training, rng);
}

Var Model::decoder_distribution(const Var& hidden, const Var& copy_probs, const std::vector<int>& copy_ids) const {
  Var logits = nn::linear(hidden, out_w_, out_b_);
  Var dist = nn::softmax_rows(logits);
  if (!config_.pointer) return dist;
  Var gate = nn::sigmoid(nn::linear(hidden, gate_w_, gate_b_));
  return pointer_mix(dist, copy_probs, copy_ids, gate);
}

Var Model::loss(const Batch& batch, bool training, Rng& rng) const {
  Var memory = encode(batch, training, rng);
  if (config_.task == corpus::Task::kCompletion) {
    if (batch.mask_rows.empty()) throw Error(ErrorCode::kBadMaskPosition, "batch has no completion targets");
    for (int r : batch.mask_rows) {
      if (batch.tokens[static_cast<std::size_t>(r)] != corpus::special::kMask) {
        throw Error(ErrorCode::kBadMaskPosition, "row " + std::to_string(r) + " does not hold <MASK>");
      }
    }
    Var logits = nn::linear(nn::gather_rows(memory, batch.mask_rows), out_w_, out_b_);
    return completion_loss(logits, batch.answers);
  }
  Var y = embed_tokens(batch.decoder_inputs);
  Matrix pe(y.rows(), config_.d);
  for (int s = 0; s < batch.target_layout.sequences(); ++s) {
    const auto k = static_cast<std::size_t>(s);
    pe.middleRows(batch.target_layout.begin[k], batch.target_layout.length[k]) =
        sinusoidal_positions(batch.target_layout.length[k], config_.d);
  }
  y = nn::dropout(nn::add(y, nn::constant(std::move(pe))), config_.dropout, rng, training);
  DecoderOutput out = decoder_->forward(y, batch.target_layout, memory, batch.layout, training, rng);
  if (!config_.pointer) return completion_loss(nn::linear(out.hidden, out_w_, out_b_), batch.targets);
  return sequence_loss(decoder_distribution(out.hidden, out.copy_probs, batch.copy_ids), batch.targets);
}

Matrix Model::completion_logits(const Batch& batch) const {
  nn::NoGradGuard guard;
  Rng unused(0);
  Var memory = encode(batch, false, unused);
  Matrix out(static_cast<Index>(batch.samples.size()), config_.vocab_size);
  for (std::size_t s = 0; s < batch.samples.size(); ++s) {
    const auto* c = std::get_if<corpus::CompletionTarget>(&batch.samples[s]->target);
    if (!c) throw Error(ErrorCode::kBadMaskPosition, "sample " + batch.samples[s]->id + " has no mask");
    Var rows = nn::slice_rows(memory, batch.layout.begin[s], batch.layout.length[s]);
    out.row(static_cast<Index>(s)) =
        model::completion_logits(rows, c->mask_position, batch.samples[s]->subtokens, out_w_, out_b_).value();
  }
  return out;
}

std::vector<std::vector<int>> Model::decode(const Batch& batch) const {
  if (!decoder_) throw Error(ErrorCode::kConfig, "model has no decoder");
  nn::NoGradGuard guard;
  Rng unused(0);
  const Matrix memory = encode(batch, false, unused).value();
  std::vector<std::vector<int>> out;
  for (std::size_t s = 0; s < batch.samples.size(); ++s) {
    const auto* sample = batch.samples[s];
    DecoderState state = decoder_->start(memory.middleRows(batch.layout.begin[s], batch.layout.length[s]),
                                         corpus::special::kBos);
    auto next = [&](int token, int pos) -> Eigen::RowVectorXd {
      if (pos > 0) state.prefix.push_back(token);
      Matrix x = embed_tokens({token}).value() + sinusoidal_positions(1, config_.d, pos);
      auto [h, copy] = decoder_->step(state, x);
      return decoder_distribution(nn::constant(h), nn::constant(copy), sample->subtokens).value().row(0);
    };
    out.push_back(greedy_decode(next, corpus::special::kBos, corpus::special::kEos, config_.max_decode));
  }
  return out;
}

Matrix Model::pooled_embeddings(const Batch& batch) const {
  nn::NoGradGuard guard;
  Rng unused(0);
  const Matrix memory = encode(batch, false, unused).value();
  Matrix out(static_cast<Index>(batch.samples.size()), config_.d);
  for (std::size_t s = 0; s < batch.samples.size(); ++s) {
    out.row(static_cast<Index>(s)) = memory.middleRows(batch.layout.begin[s], batch.layout.length[s]).colwise().mean();
  }
  return out;
}

}  // namespace metatp::model
