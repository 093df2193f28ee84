#include "metatp/corpus/vocabulary.hpp"

#include <algorithm>

#include "metatp/common/rng.hpp"

namespace metatp::corpus {

TokenVocab TokenVocab::build(std::span<const std::string_view> specials,
                             const std::map<std::string, std::int64_t>& counts, std::int64_t min_count) {
  std::vector<std::pair<std::string, std::int64_t>> kept;
  for (const auto& [tok, n] : counts) {
    const bool is_special = std::find(specials.begin(), specials.end(), tok) != specials.end();
    if (!is_special && n >= min_count) kept.emplace_back(tok, n);
  }
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::vector<std::string> tokens;
  std::vector<std::int64_t> cnt;
  for (auto s : specials) {
    tokens.emplace_back(s);
    cnt.push_back(0);
  }
  for (auto& [tok, n] : kept) {
    tokens.push_back(tok);
    cnt.push_back(n);
  }
  return from_entries(std::move(tokens), std::move(cnt), static_cast<int>(specials.size()));
}

TokenVocab TokenVocab::from_entries(std::vector<std::string> tokens, std::vector<std::int64_t> counts, int num_specials) {
  TokenVocab v;
  v.tokens_ = std::move(tokens);
  v.counts_ = std::move(counts);
  v.counts_.resize(v.tokens_.size(), 0);
  v.num_specials_ = num_specials;
  for (std::size_t i = 0; i < v.tokens_.size(); ++i) v.index_.emplace(v.tokens_[i], static_cast<int>(i));
  return v;
}

int TokenVocab::id(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  return it == index_.end() ? 1 : it->second;  // both special lists put <UNK> at 1
}

bool TokenVocab::contains(std::string_view token) const { return index_.contains(std::string(token)); }

std::uint64_t TokenVocab::hash() const {
  std::uint64_t h = fnv1a(nullptr, 0);
  for (const auto& t : tokens_) {
    h = fnv1a(t.data(), t.size(), h);
    const char sep = '\n';
    h = fnv1a(&sep, 1, h);
  }
  return h;
}

}  // namespace metatp::corpus
