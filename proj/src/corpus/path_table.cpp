#include "metatp/corpus/path_table.hpp"

#include <algorithm>

namespace metatp::corpus {

PathTable::PathTable() {
  entries_.emplace_back();
  index_.emplace(std::vector<int>{}, 0);
}

int PathTable::intern(const std::vector<int>& path) {
  const auto [it, inserted] = index_.emplace(path, static_cast<int>(entries_.size()));
  if (inserted) entries_.push_back(path);
  return it->second;
}

int PathTable::find(const std::vector<int>& path) const {
  const auto it = index_.find(path);
  return it == index_.end() ? -1 : it->second;
}

std::size_t PathTable::max_length() const {
  std::size_t m = 0;
  for (const auto& e : entries_) m = std::max(m, e.size());
  return m;
}

}  // namespace metatp::corpus
