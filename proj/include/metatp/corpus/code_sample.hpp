#pragma once

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

namespace metatp::corpus {

inline constexpr std::size_t kMaxSequenceLength = 512;

enum class Task { kSummarization, kCompletion };

const char* to_string(Task task);
Task task_from_string(const std::string& name);

struct SummaryTarget {
  std::vector<int> subtokens;  // terminated by <EOS>
  friend bool operator==(const SummaryTarget&, const SummaryTarget&) = default;
};

struct CompletionTarget {
  int mask_position = 0;
  int answer_id = 0;
  friend bool operator==(const CompletionTarget&, const CompletionTarget&) = default;
};

// One task-ready function. Paths are stored per retained leaf ("slot"):
// subtokens of the same source token share a slot, so the position-pair
// path is rel_paths[leaf_of[i] * num_leaves + leaf_of[j]].
struct CodeSample {
  std::string id;
  int language = 0;
  std::vector<int> subtokens;
  std::vector<int> leaf_of;     // position -> slot
  std::vector<int> leaf_nodes;  // slot -> syntax tree node index
  std::vector<int> rel_paths;   // slot x slot PathTable ids, diagonal 0
  std::vector<int> abs_paths;   // slot -> PathTable id
  std::variant<SummaryTarget, CompletionTarget> target;

  int length() const { return static_cast<int>(subtokens.size()); }
  int num_leaves() const { return static_cast<int>(leaf_nodes.size()); }
  int rel_path(int i, int j) const {
    return rel_paths[static_cast<std::size_t>(leaf_of[static_cast<std::size_t>(i)]) * leaf_nodes.size() +
                     static_cast<std::size_t>(leaf_of[static_cast<std::size_t>(j)])];
  }
  int abs_path(int i) const { return abs_paths[static_cast<std::size_t>(leaf_of[static_cast<std::size_t>(i)])]; }

  friend bool operator==(const CodeSample&, const CodeSample&) = default;
};

}  // namespace metatp::corpus
