#pragma once

#include <span>
#include <vector>

#include "metatp/corpus/code_sample.hpp"
#include "metatp/corpus/path_table.hpp"
#include "metatp/model/attention.hpp"

namespace metatp::model {

// Samples packed row-wise with paths deduplicated across the batch.
struct Batch {
  std::vector<const corpus::CodeSample*> samples;
  std::vector<int> group_language;  // weight group -> language code
  PackedLayout layout;              // one sequence per sample, rel_paths index rel_path_list
  std::vector<int> tokens;
  std::vector<int> positions;  // position within its sample

  std::vector<std::vector<int>> rel_path_list;  // [0] is the empty path
  std::vector<std::vector<int>> abs_path_list;
  std::vector<int> abs_rows;  // per token row, index into abs_path_list

  // completion
  std::vector<int> mask_rows;
  std::vector<int> answers;

  // summarization
  PackedLayout target_layout;
  std::vector<int> decoder_inputs;  // <BOS> + target without its last id
  std::vector<int> targets;
  std::vector<int> copy_ids;  // target rows x max_source, -1 padded
  int max_source = 0;

  int size() const { return static_cast<int>(samples.size()); }
};

struct BatchOptions {
  bool paths = true;               // fill the path lists
  bool group_by_language = false;  // one weight group per language present
};

Batch make_batch(std::span<const corpus::CodeSample* const> samples, const corpus::PathTable& table,
                 const BatchOptions& options);

}  // namespace metatp::model
