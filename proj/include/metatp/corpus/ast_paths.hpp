#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "metatp/corpus/syntax_tree.hpp"

namespace metatp::corpus {

inline constexpr std::size_t kMaxPathLength = 32;

enum class PathDirection : std::uint8_t { kNone, kUp, kDown };

// Node types on relative paths carry the direction of travel: "block:down",
// "identifier:up". The lowest common ancestor is unmarked.
std::string fuse_direction(std::string_view type, PathDirection dir);
std::string flip_direction(std::string_view fused);

using NodeTypePath = std::vector<std::string>;

struct PathStep {
  int node = -1;
  PathDirection dir = PathDirection::kNone;
};

// Euler tour + sparse table; O(1) LCA queries after O(n log n) setup.
class LcaIndex {
 public:
  explicit LcaIndex(const SyntaxTree& tree);

  int lca(int a, int b) const;
  int depth(int node) const { return depth_[static_cast<std::size_t>(node)]; }

  // Appends leaf_a -> ... -> lca -> ... -> leaf_b; empty when a == b.
  void route(int a, int b, std::vector<PathStep>& out) const;

 private:
  const SyntaxTree* tree_;
  std::vector<int> depth_;
  std::vector<int> first_;
  std::vector<int> euler_;
  std::vector<std::vector<int>> sparse_;  // argmin-depth over euler_ windows
};

// Throws Error(kIndex) when either index is not a leaf.
NodeTypePath relative_path(const SyntaxTree& tree, int leaf_i, int leaf_j);
NodeTypePath absolute_path(const SyntaxTree& tree, int leaf);

// Indices kept by equal-interval sampling: floor(k * len / max_len).
std::vector<std::size_t> resample_indices(std::size_t len, std::size_t max_len);

template <typename T>
std::vector<T> resample_path(const std::vector<T>& path, std::size_t max_len = kMaxPathLength) {
  if (path.size() <= max_len) return path;
  std::vector<T> out;
  out.reserve(max_len);
  for (std::size_t i : resample_indices(path.size(), max_len)) out.push_back(path[i]);
  return out;
}

}  // namespace metatp::corpus
