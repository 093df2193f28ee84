#include "metatp/corpus/syntax_tree.hpp"

#include <algorithm>
#include <functional>

#include "metatp/common/error.hpp"
#include "parser_base.hpp"

namespace metatp::corpus {

LanguageMap::LanguageMap(std::vector<std::string> names) : names_(std::move(names)) {}

LanguageId LanguageMap::intern(std::string_view name) {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it != names_.end()) return {std::string(name), static_cast<int>(it - names_.begin())};
  names_.emplace_back(name);
  return {std::string(name), static_cast<int>(names_.size()) - 1};
}

LanguageId LanguageMap::at(std::string_view name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw Error(ErrorCode::kUnknownLanguage, std::string(name));
  return {std::string(name), static_cast<int>(it - names_.begin())};
}

const std::string& LanguageMap::name(int code) const {
  if (code < 0 || code >= size()) throw Error(ErrorCode::kUnknownLanguage, "code " + std::to_string(code));
  return names_[static_cast<std::size_t>(code)];
}

bool SyntaxTree::is_leaf(int node) const {
  return node >= 0 && node < static_cast<int>(nodes.size()) && nodes[static_cast<std::size_t>(node)].children.empty();
}

std::string_view SyntaxTree::text(int node, std::string_view source) const {
  const auto& n = nodes.at(static_cast<std::size_t>(node));
  return source.substr(n.begin, n.end - n.begin);
}

int SyntaxTree::depth(int node) const {
  int d = 0;
  for (int p = nodes.at(static_cast<std::size_t>(node)).parent; p >= 0; p = nodes[static_cast<std::size_t>(p)].parent) ++d;
  return d;
}

void SyntaxTree::finalize() {
  for (auto& n : nodes) n.parent = -1;
  leaves.clear();
  if (root < 0) return;
  // iterative preorder keeps deep trees off the call stack
  std::vector<int> stack{root};
  while (!stack.empty()) {
    const int id = stack.back();
    stack.pop_back();
    const auto& n = nodes[static_cast<std::size_t>(id)];
    if (n.children.empty()) leaves.push_back(id);
    for (auto it = n.children.rbegin(); it != n.children.rend(); ++it) {
      nodes[static_cast<std::size_t>(*it)].parent = id;
      stack.push_back(*it);
    }
  }
}

std::string SyntaxTree::to_sexp() const {
  std::string out;
  std::function<void(int)> emit = [&](int id) {
    const auto& n = nodes[static_cast<std::size_t>(id)];
    if (n.children.empty()) {
      out += n.type;
      return;
    }
    out += '(';
    out += n.type;
    for (int c : n.children) {
      out += ' ';
      emit(c);
    }
    out += ')';
  };
  if (root >= 0) emit(root);
  return out;
}

namespace {

using Adapter = SyntaxTree (*)(std::string_view);

struct Registration {
  std::string_view name;
  Adapter parse;
};

constexpr Registration kGrammars[] = {
    {"python", &detail::parse_python},
    {"javascript", &detail::parse_javascript},
};

bool is_function_type(std::string_view t) {
  return t == "function_definition" || t == "function_declaration" || t == "function_expression" ||
         t == "arrow_function" || t == "lambda" || t == "method_definition";
}

bool is_parameter_list(std::string_view t) {
  return t == "parameters" || t == "formal_parameters" || t == "lambda_parameters";
}

}  // namespace

SyntaxTree parse_source(std::string_view source, const LanguageId& language) {
  for (const auto& g : kGrammars) {
    if (g.name == language.name) {
      if (source.find_first_not_of(" \t\r\n") == std::string_view::npos) {
        throw Error(ErrorCode::kParse, "empty source");
      }
      return g.parse(source);
    }
  }
  throw Error(ErrorCode::kUnsupportedLanguage, language.name);
}

bool has_grammar(std::string_view language_name) {
  return std::any_of(std::begin(kGrammars), std::end(kGrammars), [&](const auto& g) { return g.name == language_name; });
}

std::vector<std::string> supported_languages() {
  std::vector<std::string> out;
  for (const auto& g : kGrammars) out.emplace_back(g.name);
  return out;
}

int find_function_node(const SyntaxTree& tree) {
  if (tree.root < 0) return -1;
  std::vector<int> stack{tree.root};
  while (!stack.empty()) {
    const int id = stack.back();
    stack.pop_back();
    const auto& n = tree.nodes[static_cast<std::size_t>(id)];
    if (is_function_type(n.type)) return id;
    for (auto it = n.children.rbegin(); it != n.children.rend(); ++it) stack.push_back(*it);
  }
  return -1;
}

int function_name_leaf(const SyntaxTree& tree, int function_node) {
  if (function_node < 0) return -1;
  const auto& fn = tree.nodes.at(static_cast<std::size_t>(function_node));
  if (fn.type == "arrow_function" || fn.type == "lambda") return -1;
  if (fn.type == "method_definition") {
    const int key = fn.children.front();
    return tree.nodes[static_cast<std::size_t>(key)].type == "property_identifier" ? key : -1;
  }
  for (int c : fn.children) {
    const auto& t = tree.nodes[static_cast<std::size_t>(c)].type;
    if (is_parameter_list(t)) break;
    if (t == "identifier") return c;
  }
  return -1;
}

}  // namespace metatp::corpus
