#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "metatp/corpus/code_sample.hpp"
#include "metatp/model/batch.hpp"
#include "metatp/model/layers.hpp"
#include "metatp/model/meta_learner.hpp"
#include "metatp/model/path_encoder.hpp"

namespace metatp::model {

struct ModelConfig {
  corpus::Task task = corpus::Task::kCompletion;
  Variant variant = Variant::kTPTrans;
  Scheme scheme = Scheme::kNone;
  int vocab_size = 0;
  int num_node_types = 0;
  int num_languages = 0;

  int word_dim = 64;
  int d = 64;
  int heads = 2;
  int layers = 2;
  int decoder_layers = 1;
  int ffn_dim = 256;
  double dropout = 0.0;
  int node_dim = 64;
  int path_hidden = 64;
  bool shared_path_encoder = true;
  int d_t = 64;
  int d_p = 128;
  bool pointer = true;
  int max_positions = static_cast<int>(corpus::kMaxSequenceLength);
  int max_decode = 8;

  // Throws Error(kConfig).
  void validate() const;
};

// Encoder (any variant, optional meta learner) with the task head.
class Model {
 public:
  Model(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  nn::ParameterStore& params() { return params_; }
  const nn::ParameterStore& params() const { return params_; }

  BatchOptions batch_options() const;

  // Contextual vectors for every packed token row.
  Var encode(const Batch& batch, bool training, Rng& rng) const;
  // Training objective for the configured task.
  Var loss(const Batch& batch, bool training, Rng& rng) const;

  // Evaluation helpers; no graph is recorded.
  Matrix completion_logits(const Batch& batch) const;  // samples x |V|
  std::vector<std::vector<int>> decode(const Batch& batch) const;
  Matrix pooled_embeddings(const Batch& batch) const;  // samples x d

  const Encoder& encoder() const { return *encoder_; }
  const MetaLearner* meta() const { return meta_ ? meta_.get() : nullptr; }
  const PathEncoder* path_encoder() const { return rel_paths_ ? rel_paths_.get() : nullptr; }

 private:
  Var embed_tokens(const std::vector<int>& ids) const;
  Var decoder_distribution(const Var& hidden, const Var& copy_probs, const std::vector<int>& copy_ids) const;

  ModelConfig config_;
  nn::ParameterStore params_;
  Var word_embedding_, word_proj_w_, word_proj_b_;
  std::unique_ptr<PathEncoder> rel_paths_;
  std::unique_ptr<PathEncoder> abs_paths_;  // null when shared
  std::optional<PositionTables> positions_;
  std::unique_ptr<MetaLearner> meta_;
  std::unique_ptr<Encoder> encoder_;
  std::unique_ptr<Decoder> decoder_;
  Var out_w_, out_b_;    // d -> |V|
  Var gate_w_, gate_b_;  // d -> 1
};

}  // namespace metatp::model
