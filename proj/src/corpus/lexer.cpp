#include "lexer.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>

#include "metatp/common/error.hpp"

namespace metatp::corpus::detail {
namespace {

bool ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c == '$' || c >= 0x80; }
bool ident_char(unsigned char c) { return std::isalnum(c) || c == '_' || c == '$' || c >= 0x80; }

[[noreturn]] void fail(std::size_t pos, const std::string& what) {
  throw Error(ErrorCode::kParse, what + " at byte " + std::to_string(pos));
}

class Scanner {
 public:
  Scanner(std::string_view src, const LexerRules& rules) : src_(src), rules_(rules) {}

  std::vector<Token> run() {
    indents_.push_back(0);
    at_line_start_ = true;
    while (true) {
      if (rules_.indentation && at_line_start_ && depth_ == 0) {
        if (!handle_indentation()) break;
      }
      skip_space_and_comments();
      if (pos_ >= src_.size()) break;
      const unsigned char c = static_cast<unsigned char>(src_[pos_]);
      if (c == '\n') {
        ++pos_;
        saw_newline_ = true;
        if (rules_.indentation && depth_ == 0) {
          if (!out_.empty() && out_.back().kind != TokenKind::kNewline && out_.back().kind != TokenKind::kIndent &&
              out_.back().kind != TokenKind::kDedent) {
            push(TokenKind::kNewline, pos_ - 1, pos_ - 1);
          }
          at_line_start_ = true;
        }
        continue;
      }
      if (c == '\\' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '\n') {
        pos_ += 2;  // explicit line continuation
        continue;
      }
      if (std::isdigit(c) || (c == '.' && pos_ + 1 < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
        lex_number();
      } else if (string_start()) {
        lex_string();
      } else if (ident_start(c)) {
        lex_identifier();
      } else {
        lex_punct();
      }
    }
    if (rules_.indentation) {
      if (!out_.empty() && out_.back().kind != TokenKind::kNewline && out_.back().kind != TokenKind::kDedent) {
        push(TokenKind::kNewline, src_.size(), src_.size());
      }
      while (indents_.size() > 1) {
        indents_.pop_back();
        push(TokenKind::kDedent, src_.size(), src_.size());
      }
    }
    push(TokenKind::kEnd, src_.size(), src_.size());
    return std::move(out_);
  }

 private:
  void push(TokenKind kind, std::size_t b, std::size_t e) {
    Token t;
    t.kind = kind;
    t.begin = b;
    t.end = e;
    t.text = src_.substr(b, e - b);
    t.newline_before = saw_newline_;
    saw_newline_ = false;
    out_.push_back(t);
  }

  // Returns false at end of input.
  bool handle_indentation() {
    while (true) {
      std::size_t col = 0;
      std::size_t p = pos_;
      while (p < src_.size() && (src_[p] == ' ' || src_[p] == '\t')) {
        col += src_[p] == '\t' ? 8 - (col % 8) : 1;
        ++p;
      }
      if (p >= src_.size()) {
        pos_ = p;
        return false;
      }
      if (src_[p] == '\n' || src_[p] == '\r' || (src_[p] == '#' && rules_.hash_comments)) {
        // blank or comment-only line
        while (p < src_.size() && src_[p] != '\n') ++p;
        pos_ = p < src_.size() ? p + 1 : p;
        saw_newline_ = true;
        continue;
      }
      pos_ = p;
      at_line_start_ = false;
      if (col > indents_.back()) {
        indents_.push_back(col);
        push(TokenKind::kIndent, p, p);
      } else {
        while (col < indents_.back()) {
          indents_.pop_back();
          push(TokenKind::kDedent, p, p);
        }
        if (col != indents_.back()) fail(p, "inconsistent dedent");
      }
      return true;
    }
  }

  void skip_space_and_comments() {
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (c == ' ' || c == '\t' || c == '\r' || c == '\f') {
        ++pos_;
      } else if (c == '\n' && !(rules_.indentation && depth_ == 0)) {
        ++pos_;
        saw_newline_ = true;
      } else if (rules_.hash_comments && c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
      } else if (rules_.slash_comments && c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '/') {
        while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
      } else if (rules_.slash_comments && c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '*') {
        const auto close = src_.find("*/", pos_ + 2);
        if (close == std::string_view::npos) fail(pos_, "unterminated comment");
        if (src_.substr(pos_, close - pos_).find('\n') != std::string_view::npos) saw_newline_ = true;
        pos_ = close + 2;
      } else {
        break;
      }
    }
  }

  bool string_start() const {
    const char c = src_[pos_];
    if (c == '"' || c == '\'') return true;
    if (rules_.template_strings && c == '`') return true;
    if (rules_.python_string_prefixes) {
      std::size_t p = pos_;
      while (p < src_.size() && p - pos_ < 2 && std::strchr("rRbBfFuU", src_[p]) != nullptr) ++p;
      return p > pos_ && p < src_.size() && (src_[p] == '"' || src_[p] == '\'');
    }
    return false;
  }

  void lex_string() {
    const std::size_t start = pos_;
    while (src_[pos_] != '"' && src_[pos_] != '\'' && src_[pos_] != '`') ++pos_;  // prefix
    const char quote = src_[pos_];
    const bool triple = rules_.python_string_prefixes && src_.substr(pos_, 3) == std::string(3, quote);
    pos_ += triple ? 3 : 1;
    int template_depth = 0;
    while (true) {
      if (pos_ >= src_.size()) fail(start, "unterminated string");
      const char c = src_[pos_];
      if (c == '\\') {
        pos_ += 2;
        continue;
      }
      if (quote == '`' && c == '$' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '{') {
        ++template_depth;
        pos_ += 2;
        continue;
      }
      if (quote == '`' && c == '}' && template_depth > 0) {
        --template_depth;
        ++pos_;
        continue;
      }
      if (c == '\n' && !triple && quote != '`') fail(start, "newline in string");
      if (c == quote && template_depth == 0) {
        if (!triple) {
          ++pos_;
          break;
        }
        if (src_.substr(pos_, 3) == std::string(3, quote)) {
          pos_ += 3;
          break;
        }
      }
      ++pos_;
    }
    push(TokenKind::kString, start, pos_);
  }

  void lex_number() {
    const std::size_t start = pos_;
    if (src_[pos_] == '0' && pos_ + 1 < src_.size() && std::strchr("xXoObB", src_[pos_ + 1]) != nullptr) {
      pos_ += 2;
      while (pos_ < src_.size() && (std::isxdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) ++pos_;
    } else {
      while (pos_ < src_.size()) {
        const unsigned char c = static_cast<unsigned char>(src_[pos_]);
        if (std::isdigit(c) || c == '_' || c == '.') {
          ++pos_;
        } else if ((c == 'e' || c == 'E') && pos_ + 1 < src_.size()) {
          ++pos_;
          if (src_[pos_] == '+' || src_[pos_] == '-') ++pos_;
        } else {
          break;
        }
      }
    }
    while (pos_ < src_.size() && std::strchr("jJlLn", src_[pos_]) != nullptr && src_[pos_] != '\0') ++pos_;
    push(TokenKind::kNumber, start, pos_);
  }

  void lex_identifier() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && ident_char(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    const auto word = src_.substr(start, pos_ - start);
    push(rules_.keywords.contains(word) ? TokenKind::kKeyword : TokenKind::kIdentifier, start, pos_);
  }

  void lex_punct() {
    for (const auto p : rules_.punctuators) {
      if (src_.substr(pos_, p.size()) == p) {
        if (p == "(" || p == "[" || p == "{") ++depth_;
        if ((p == ")" || p == "]" || p == "}") && depth_ > 0) --depth_;
        push(TokenKind::kPunct, pos_, pos_ + p.size());
        pos_ += p.size();
        return;
      }
    }
    fail(pos_, std::string("unexpected character '") + src_[pos_] + "'");
  }

  std::string_view src_;
  const LexerRules& rules_;
  std::vector<Token> out_;
  std::vector<std::size_t> indents_;
  std::size_t pos_ = 0;
  int depth_ = 0;
  bool at_line_start_ = false;
  bool saw_newline_ = false;
};

std::vector<std::string_view> sorted_longest_first(std::vector<std::string_view> v) {
  std::stable_sort(v.begin(), v.end(), [](auto a, auto b) { return a.size() > b.size(); });
  return v;
}

}  // namespace

std::vector<Token> tokenize(std::string_view source, const LexerRules& rules) {
  return Scanner(source, rules).run();
}

const LexerRules& python_rules() {
  static const LexerRules rules = [] {
    LexerRules r;
    r.keywords = {"def",   "return", "if",     "elif", "else",   "for",    "while", "in",    "not",
                  "and",   "or",     "is",     "pass", "break",  "continue", "raise", "try", "except",
                  "finally", "as",   "lambda", "True", "False",  "None",   "yield", "del",   "global",
                  "nonlocal", "assert", "with", "import", "from", "class", "await", "async"};
    r.punctuators = sorted_longest_first({"**=", "//=", ">>=", "<<=", "->", "+=", "-=", "*=", "/=", "%=", "&=",
                                          "|=", "^=", "==", "!=", "<=", ">=", "**", "//", "<<", ">>", ":=",
                                          "+", "-", "*", "/", "%", "&", "|", "^", "~", "<", ">", "(", ")",
                                          "[", "]", "{", "}", ",", ":", ".", ";", "=", "@"});
    r.hash_comments = true;
    r.python_string_prefixes = true;
    r.indentation = true;
    return r;
  }();
  return rules;
}

const LexerRules& javascript_rules() {
  static const LexerRules rules = [] {
    LexerRules r;
    r.keywords = {"function", "return", "if",     "else",   "for",   "while", "do",     "var",   "let",
                  "const",    "new",    "this",   "true",   "false", "null",  "typeof", "instanceof",
                  "in",       "of",     "break",  "continue", "throw", "try", "catch",  "finally",
                  "void",     "delete", "async",  "await",  "class", "switch", "case",  "default", "yield"};
    r.punctuators = sorted_longest_first({">>>=", "===", "!==", "**=", "<<=", ">>=", ">>>", "...", "&&=", "||=",
                                          "?\?=", "=>", "==", "!=", "<=", ">=", "&&", "||", "??", "?.", "++",
                                          "--", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "**", "<<",
                                          ">>", "+", "-", "*", "/", "%", "&", "|", "^", "~", "!", "<", ">",
                                          "(", ")", "[", "]", "{", "}", ",", ":", ".", ";", "=", "?"});
    r.slash_comments = true;
    r.template_strings = true;
    return r;
  }();
  return rules;
}

}  // namespace metatp::corpus::detail
