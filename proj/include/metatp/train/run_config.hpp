#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "metatp/corpus/dataset.hpp"
#include "metatp/model/model.hpp"

namespace metatp::train {

struct RunConfig {
  corpus::Task task = corpus::Task::kCompletion;

  model::Variant variant = model::Variant::kTPTrans;
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
  bool pointer = true;
  int max_decode = 8;

  model::Scheme scheme = model::Scheme::kNone;
  int d_t = 64;
  int d_p = 128;

  std::string optimizer = "adam";
  double lr = 1e-4;
  double clip_norm = 1.0;  // <= 0 disables clipping

  int batch_size = 32;
  int epochs = 10;
  std::uint64_t seed = 1;
  bool per_language_batches = false;
  std::string kernels = "parallel";  // or "serial"

  std::string dataset;
  std::string train_split = "train";
  std::string valid_split = "valid";

  // Throws Error(kConfig).
  void validate() const;

  nlohmann::json to_json() const;
  // Unknown keys and wrong types throw Error(kConfig). Missing keys keep
  // their defaults.
  static RunConfig from_json(const nlohmann::json& j);

  model::ModelConfig model_config(const corpus::Dataset& dataset) const;
};

// "a.b.c=value"; value is parsed as JSON when possible, else taken as a
// string. The key must already exist in the config schema.
void apply_override(nlohmann::json& config, const std::string& assignment);

// Reads a JSON file, or a preset name resolved against the preset directory.
nlohmann::json load_config_json(const std::string& path_or_preset);

// $METATP_CONFIG_DIR when set, else the configs/ directory of the source tree.
std::filesystem::path preset_directory();
std::vector<std::string> preset_names();

RunConfig load_run_config(const std::string& path_or_preset, const std::vector<std::string>& overrides);

}  // namespace metatp::train
