#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace metatp::corpus {

// Fixed low ids shared by every subtoken vocabulary.
namespace special {
inline constexpr int kPad = 0;
inline constexpr int kUnk = 1;
inline constexpr int kMask = 2;
inline constexpr int kBos = 3;
inline constexpr int kEos = 4;
inline constexpr int kName = 5;
inline constexpr int kCount = 6;
}  // namespace special

inline constexpr std::string_view kSubtokenSpecials[] = {"<PAD>", "<UNK>", "<MASK>", "<BOS>", "<EOS>", "<NAME>"};
inline constexpr std::string_view kNodeTypeSpecials[] = {"<PAD>", "<UNK>"};
inline constexpr int kDefaultMinCount = 100;

class TokenVocab {
 public:
  TokenVocab() = default;

  // Specials first, then every entry with count >= min_count ordered by
  // descending count, ties broken lexicographically.
  static TokenVocab build(std::span<const std::string_view> specials, const std::map<std::string, std::int64_t>& counts,
                          std::int64_t min_count);
  // Rebuilds from a stored token list; counts are informational.
  static TokenVocab from_entries(std::vector<std::string> tokens, std::vector<std::int64_t> counts, int num_specials);

  int id(std::string_view token) const;  // unk id when absent
  bool contains(std::string_view token) const;
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::int64_t count(int id) const { return counts_.at(static_cast<std::size_t>(id)); }
  int size() const { return static_cast<int>(tokens_.size()); }
  int num_specials() const { return num_specials_; }
  bool is_special(int id) const { return id < num_specials_; }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::vector<std::int64_t>& counts() const { return counts_; }
  std::uint64_t hash() const;

  friend bool operator==(const TokenVocab& a, const TokenVocab& b) {
    return a.tokens_ == b.tokens_ && a.counts_ == b.counts_ && a.num_specials_ == b.num_specials_;
  }

 private:
  std::vector<std::string> tokens_;
  std::vector<std::int64_t> counts_;
  std::unordered_map<std::string, int> index_;
  int num_specials_ = 0;
};

struct Vocabulary {
  TokenVocab subtokens;
  TokenVocab node_types;
  std::int64_t min_count = kDefaultMinCount;

  friend bool operator==(const Vocabulary&, const Vocabulary&) = default;
};

}  // namespace metatp::corpus
