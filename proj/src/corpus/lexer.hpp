#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace metatp::corpus::detail {

enum class TokenKind { kIdentifier, kKeyword, kNumber, kString, kPunct, kNewline, kIndent, kDedent, kEnd };

struct Token {
  TokenKind kind = TokenKind::kEnd;
  std::string_view text;
  std::size_t begin = 0;
  std::size_t end = 0;
  bool newline_before = false;  // a line break separates this token from the previous one
};

struct LexerRules {
  std::unordered_set<std::string_view> keywords;
  std::vector<std::string_view> punctuators;  // longest first
  bool hash_comments = false;                 // '#'
  bool slash_comments = false;                // '//' and '/* */'
  bool template_strings = false;              // backtick strings
  bool python_string_prefixes = false;        // r"", b'', f"""..."""
  bool indentation = false;                   // emit NEWLINE/INDENT/DEDENT
};

// Throws Error(kParse) on unterminated strings, stray characters, or
// inconsistent dedents.
std::vector<Token> tokenize(std::string_view source, const LexerRules& rules);

const LexerRules& python_rules();
const LexerRules& javascript_rules();

}  // namespace metatp::corpus::detail
