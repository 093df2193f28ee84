#include "metatp/corpus/subtokens.hpp"

#include <cctype>

namespace metatp::corpus {
namespace {

enum class CharClass { kSeparator, kLower, kUpper, kDigit };

CharClass classify(unsigned char c) {
  if (std::isdigit(c)) return CharClass::kDigit;
  if (std::isupper(c)) return CharClass::kUpper;
  if (std::islower(c) || c >= 0x80) return CharClass::kLower;
  return CharClass::kSeparator;
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

std::vector<std::string> split_identifier(std::string_view token) {
  std::vector<std::string> pieces;
  std::size_t start = std::string_view::npos;
  auto flush = [&](std::size_t end) {
    if (start != std::string_view::npos && end > start) pieces.push_back(lowercase(token.substr(start, end - start)));
    start = std::string_view::npos;
  };
  for (std::size_t i = 0; i < token.size(); ++i) {
    const CharClass cur = classify(static_cast<unsigned char>(token[i]));
    if (cur == CharClass::kSeparator) {
      flush(i);
      continue;
    }
    if (start == std::string_view::npos) {
      start = i;
      continue;
    }
    const CharClass prev = classify(static_cast<unsigned char>(token[i - 1]));
    bool boundary = false;
    if ((prev == CharClass::kDigit) != (cur == CharClass::kDigit)) {
      boundary = true;
    } else if (prev == CharClass::kLower && cur == CharClass::kUpper) {
      boundary = true;
    } else if (prev == CharClass::kUpper && cur == CharClass::kUpper && i + 1 < token.size() &&
               classify(static_cast<unsigned char>(token[i + 1])) == CharClass::kLower) {
      // end of an acronym run: "HTTPResponse" -> HTTP | Response
      boundary = true;
    }
    if (boundary) {
      flush(i);
      start = i;
    }
  }
  flush(token.size());
  if (pieces.empty() && !token.empty()) pieces.push_back(lowercase(token));
  return pieces;
}

bool is_punctuation(std::string_view text) {
  for (unsigned char c : text) {
    if (std::isalnum(c) || c >= 0x80) return false;
  }
  return true;
}

std::vector<LeafToken> leaf_tokens(const SyntaxTree& tree, std::string_view source) {
  std::vector<LeafToken> out;
  for (int leaf : tree.leaves) {
    const auto text = tree.text(leaf, source);
    if (is_punctuation(text)) continue;
    out.push_back({std::string(text), leaf});
  }
  return out;
}

}  // namespace metatp::corpus
