#pragma once

#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include "lexer.hpp"
#include "metatp/common/error.hpp"
#include "metatp/corpus/syntax_tree.hpp"

namespace metatp::corpus::detail {

// Token cursor plus tree construction helpers shared by the grammar adapters.
class ParserBase {
 public:
  ParserBase(std::string_view source, std::vector<Token> tokens) : source_(source), toks_(std::move(tokens)) {}

 protected:
  const Token& peek(std::size_t k = 0) const {
    const std::size_t at = pos_ + k;
    return at < toks_.size() ? toks_[at] : toks_.back();
  }
  bool at_end() const { return peek().kind == TokenKind::kEnd; }
  bool at_punct(std::string_view p, std::size_t k = 0) const {
    return peek(k).kind == TokenKind::kPunct && peek(k).text == p;
  }
  bool at_keyword(std::string_view kw, std::size_t k = 0) const {
    return peek(k).kind == TokenKind::kKeyword && peek(k).text == kw;
  }
  bool at_kind(TokenKind kind, std::size_t k = 0) const { return peek(k).kind == kind; }
  bool at_any_punct(std::initializer_list<std::string_view> ps) const {
    for (auto p : ps)
      if (at_punct(p)) return true;
    return false;
  }

  [[noreturn]] void fail(const std::string& what) const {
    const Token& t = peek();
    throw Error(ErrorCode::kParse, what + " near '" + std::string(t.text) + "' at byte " + std::to_string(t.begin));
  }

  // Consumes the current token as a leaf with the given type (defaults to the
  // token text, i.e. an anonymous node).
  int leaf(std::string type = {}) {
    const Token& t = peek();
    if (t.kind == TokenKind::kEnd) fail("unexpected end of input");
    SyntaxNode n;
    n.type = type.empty() ? std::string(t.text) : std::move(type);
    n.begin = t.begin;
    n.end = t.end;
    ++pos_;
    tree_.nodes.push_back(std::move(n));
    return static_cast<int>(tree_.nodes.size()) - 1;
  }

  int expect_punct(std::string_view p) {
    if (!at_punct(p)) fail("expected '" + std::string(p) + "'");
    return leaf();
  }
  int expect_keyword(std::string_view kw) {
    if (!at_keyword(kw)) fail("expected '" + std::string(kw) + "'");
    return leaf();
  }
  int expect_identifier(std::string type = "identifier") {
    if (!at_kind(TokenKind::kIdentifier)) fail("expected identifier");
    return leaf(std::move(type));
  }
  void expect_kind(TokenKind kind, const char* what) {
    if (!at_kind(kind)) fail(std::string("expected ") + what);
    ++pos_;
  }

  int make(std::string type, std::vector<int> children) {
    if (children.empty()) fail("empty " + type);
    SyntaxNode n;
    n.type = std::move(type);
    n.begin = tree_.nodes[children.front()].begin;
    n.end = tree_.nodes[children.back()].end;
    n.children = std::move(children);
    tree_.nodes.push_back(std::move(n));
    return static_cast<int>(tree_.nodes.size()) - 1;
  }

  const std::string& type_of(int node) const { return tree_.nodes[node].type; }

  SyntaxTree finish(int root) {
    tree_.root = root;
    tree_.finalize();
    return std::move(tree_);
  }

  std::string_view source_;
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  SyntaxTree tree_;
};

SyntaxTree parse_python(std::string_view source);
SyntaxTree parse_javascript(std::string_view source);

}  // namespace metatp::corpus::detail
