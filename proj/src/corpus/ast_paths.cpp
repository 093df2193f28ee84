#include "metatp/corpus/ast_paths.hpp"

#include <algorithm>

#include "metatp/common/error.hpp"

namespace metatp::corpus {
namespace {

constexpr std::string_view kUpSuffix = ":up";
constexpr std::string_view kDownSuffix = ":down";

void require_leaf(const SyntaxTree& tree, int node) {
  if (!tree.is_leaf(node)) throw Error(ErrorCode::kIndex, "node " + std::to_string(node) + " is not a leaf");
}

}  // namespace

std::string fuse_direction(std::string_view type, PathDirection dir) {
  std::string out(type);
  if (dir == PathDirection::kUp) out += kUpSuffix;
  if (dir == PathDirection::kDown) out += kDownSuffix;
  return out;
}

std::string flip_direction(std::string_view fused) {
  if (fused.ends_with(kUpSuffix)) {
    return fuse_direction(fused.substr(0, fused.size() - kUpSuffix.size()), PathDirection::kDown);
  }
  if (fused.ends_with(kDownSuffix)) {
    return fuse_direction(fused.substr(0, fused.size() - kDownSuffix.size()), PathDirection::kUp);
  }
  return std::string(fused);
}

LcaIndex::LcaIndex(const SyntaxTree& tree) : tree_(&tree) {
  const std::size_t n = tree.nodes.size();
  depth_.assign(n, 0);
  first_.assign(n, -1);
  if (tree.root < 0) return;
  euler_.reserve(2 * n);
  // iterative DFS emitting the node on entry and after each child
  std::vector<std::pair<int, std::size_t>> stack{{tree.root, 0}};
  while (!stack.empty()) {
    auto& [node, next_child] = stack.back();
    const auto& kids = tree.nodes[static_cast<std::size_t>(node)].children;
    if (next_child == 0) first_[static_cast<std::size_t>(node)] = static_cast<int>(euler_.size());
    euler_.push_back(node);
    if (next_child < kids.size()) {
      const int child = kids[next_child++];
      depth_[static_cast<std::size_t>(child)] = depth_[static_cast<std::size_t>(node)] + 1;
      stack.emplace_back(child, 0);
    } else {
      stack.pop_back();
    }
  }
  const std::size_t m = euler_.size();
  sparse_.push_back(euler_);
  for (std::size_t span = 2; span <= m; span *= 2) {
    const auto& prev = sparse_.back();
    std::vector<int> level(m - span + 1);
    for (std::size_t i = 0; i + span <= m; ++i) {
      const int a = prev[i];
      const int b = prev[i + span / 2];
      level[i] = depth_[static_cast<std::size_t>(a)] <= depth_[static_cast<std::size_t>(b)] ? a : b;
    }
    sparse_.push_back(std::move(level));
  }
}

int LcaIndex::lca(int a, int b) const {
  std::size_t lo = static_cast<std::size_t>(first_[static_cast<std::size_t>(a)]);
  std::size_t hi = static_cast<std::size_t>(first_[static_cast<std::size_t>(b)]);
  if (lo > hi) std::swap(lo, hi);
  const std::size_t len = hi - lo + 1;
  std::size_t level = 0;
  while ((std::size_t{2} << level) <= len) ++level;
  const int x = sparse_[level][lo];
  const int y = sparse_[level][hi + 1 - (std::size_t{1} << level)];
  return depth_[static_cast<std::size_t>(x)] <= depth_[static_cast<std::size_t>(y)] ? x : y;
}

void LcaIndex::route(int a, int b, std::vector<PathStep>& out) const {
  if (a == b) return;
  const int top = lca(a, b);
  for (int v = a; v != top; v = tree_->nodes[static_cast<std::size_t>(v)].parent) out.push_back({v, PathDirection::kUp});
  out.push_back({top, PathDirection::kNone});
  const std::size_t mark = out.size();
  for (int v = b; v != top; v = tree_->nodes[static_cast<std::size_t>(v)].parent) out.push_back({v, PathDirection::kDown});
  std::reverse(out.begin() + static_cast<std::ptrdiff_t>(mark), out.end());
}

NodeTypePath relative_path(const SyntaxTree& tree, int leaf_i, int leaf_j) {
  require_leaf(tree, leaf_i);
  require_leaf(tree, leaf_j);
  std::vector<PathStep> steps;
  LcaIndex(tree).route(leaf_i, leaf_j, steps);
  NodeTypePath out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back(fuse_direction(tree.nodes[static_cast<std::size_t>(s.node)].type, s.dir));
  return out;
}

NodeTypePath absolute_path(const SyntaxTree& tree, int leaf) {
  require_leaf(tree, leaf);
  NodeTypePath out;
  for (int v = leaf; v >= 0; v = tree.nodes[static_cast<std::size_t>(v)].parent) {
    out.push_back(tree.nodes[static_cast<std::size_t>(v)].type);
  }
  std::reverse(out.begin(), out.end());
  return out;
}

std::vector<std::size_t> resample_indices(std::size_t len, std::size_t max_len) {
  std::vector<std::size_t> idx;
  if (max_len == 0) return idx;
  if (len <= max_len) {
    idx.resize(len);
    for (std::size_t i = 0; i < len; ++i) idx[i] = i;
    return idx;
  }
  idx.reserve(max_len);
  for (std::size_t k = 0; k < max_len; ++k) idx.push_back(k * len / max_len);
  return idx;
}

}  // namespace metatp::corpus
