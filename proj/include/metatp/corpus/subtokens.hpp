#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "metatp/corpus/syntax_tree.hpp"

namespace metatp::corpus {

// Splits a code token on naming-convention boundaries (camelCase, acronym
// runs, underscores and other non-alphanumerics, letter/digit changes) and
// lowercases the pieces. Never returns an empty vector for a non-empty token.
std::vector<std::string> split_identifier(std::string_view token);

// A leaf is punctuation when its text contains no letter or digit.
bool is_punctuation(std::string_view text);

struct LeafToken {
  std::string text;
  int leaf = -1;  // node index in the tree
};

// Source-ordered non-punctuation leaves.
std::vector<LeafToken> leaf_tokens(const SyntaxTree& tree, std::string_view source);

}  // namespace metatp::corpus
