#pragma once

#include <map>
#include <vector>

namespace metatp::corpus {

// Deduplicated node-type-id sequences. Id 0 is the empty (self) path.
class PathTable {
 public:
  PathTable();

  int intern(const std::vector<int>& path);
  // -1 when absent
  int find(const std::vector<int>& path) const;
  const std::vector<int>& entry(int id) const { return entries_.at(static_cast<std::size_t>(id)); }
  int size() const { return static_cast<int>(entries_.size()); }
  const std::vector<std::vector<int>>& entries() const { return entries_; }
  std::size_t max_length() const;

  friend bool operator==(const PathTable& a, const PathTable& b) { return a.entries_ == b.entries_; }

 private:
  std::vector<std::vector<int>> entries_;
  std::map<std::vector<int>, int> index_;
};

}  // namespace metatp::corpus
