#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "metatp/corpus/dataset.hpp"
#include "metatp/model/model.hpp"
#include "metatp/nn/parameters.hpp"
#include "metatp/train/run_config.hpp"

namespace metatp::train {

struct VocabStamp {
  std::uint64_t subtokens = 0;
  std::uint64_t node_types = 0;
  std::vector<std::string> languages;

  static VocabStamp of(const corpus::Dataset& dataset);
  friend bool operator==(const VocabStamp&, const VocabStamp&) = default;
};

struct Checkpoint {
  RunConfig config;
  int epoch = 0;
  VocabStamp stamp;
  std::unique_ptr<model::Model> model;
  std::string optimizer_state;  // Adam::save bytes, empty when absent
};

void save_checkpoint(const std::filesystem::path& file, const RunConfig& config, const model::Model& model,
                     const nn::Adam* optimizer, int epoch, const VocabStamp& stamp);

// Throws Error(kVocabMismatch) when the dataset's vocabularies differ from
// the ones the checkpoint was trained on, Error(kCorruptFile) or
// Error(kFormatVersionMismatch) on a bad file.
Checkpoint load_checkpoint(const std::filesystem::path& file, const corpus::Dataset& dataset);

}  // namespace metatp::train
