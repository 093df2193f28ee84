#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "metatp/corpus/language.hpp"

namespace metatp::corpus {

struct SyntaxNode {
  std::string type;
  std::vector<int> children;
  int parent = -1;
  std::size_t begin = 0;  // byte span [begin, end)
  std::size_t end = 0;

  friend bool operator==(const SyntaxNode&, const SyntaxNode&) = default;
};

// Concrete syntax tree in the tree-sitter style: named nodes carry grammar
// rule names ("function_definition"), anonymous leaves carry their literal
// text as type ("def", "(").
struct SyntaxTree {
  std::vector<SyntaxNode> nodes;
  int root = -1;
  std::vector<int> leaves;  // source order

  bool is_leaf(int node) const;
  std::string_view text(int node, std::string_view source) const;
  int depth(int node) const;

  // Recomputes parents and the leaf list from the child links.
  void finalize();

  // Node types as an s-expression, e.g. (module (function_definition def ...)).
  std::string to_sexp() const;

  friend bool operator==(const SyntaxTree&, const SyntaxTree&) = default;
};

// Grammar adapters are registered for "python" and "javascript".
// Throws Error(kParse) on rejected input and Error(kUnsupportedLanguage)
// when no adapter exists for the language name.
SyntaxTree parse_source(std::string_view source, const LanguageId& language);

bool has_grammar(std::string_view language_name);
std::vector<std::string> supported_languages();

// The first function-like node in preorder (definition, declaration,
// expression or arrow function), or -1.
int find_function_node(const SyntaxTree& tree);
// The identifier leaf naming the function node, or -1 when anonymous.
int function_name_leaf(const SyntaxTree& tree, int function_node);

}  // namespace metatp::corpus
