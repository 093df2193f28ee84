// Recursive-descent adapter for a practical subset of Python 3. Node type
// names follow tree-sitter-python so paths look like the ones produced by
// the reference tooling.

#include "parser_base.hpp"

namespace metatp::corpus::detail {
namespace {

bool is_float_literal(std::string_view t) {
  if (t.size() > 1 && t[0] == '0' && (t[1] == 'x' || t[1] == 'X' || t[1] == 'o' || t[1] == 'O' || t[1] == 'b' || t[1] == 'B'))
    return false;
  return t.find_first_of(".eEjJ") != std::string_view::npos;
}

class PythonParser : public ParserBase {
 public:
  using ParserBase::ParserBase;

  SyntaxTree parse() {
    std::vector<int> body;
    while (at_kind(TokenKind::kNewline)) ++pos_;
    while (!at_end()) {
      statement(body);
      while (at_kind(TokenKind::kNewline)) ++pos_;
    }
    if (body.empty()) fail("empty module");
    return finish(make("module", std::move(body)));
  }

 private:
  // ---- statements ---------------------------------------------------------

  void statement(std::vector<int>& out) {
    const Token& t = peek();
    if (t.kind == TokenKind::kIndent) fail("unexpected indent");
    if (at_punct("@")) {
      out.push_back(decorated_definition());
      return;
    }
    if (t.kind == TokenKind::kKeyword) {
      if (t.text == "def") return out.push_back(function_definition());
      if (t.text == "async" && at_keyword("def", 1)) return out.push_back(function_definition());
      if (t.text == "if") return out.push_back(if_statement());
      if (t.text == "for") return out.push_back(for_statement());
      if (t.text == "while") return out.push_back(while_statement());
      if (t.text == "try") return out.push_back(try_statement());
      if (t.text == "with") return out.push_back(with_statement());
      if (t.text == "class") return out.push_back(class_definition());
    }
    simple_statements(out);
  }

  void simple_statements(std::vector<int>& out) {
    out.push_back(simple_statement());
    while (at_punct(";")) {
      ++pos_;
      if (at_kind(TokenKind::kNewline) || at_end()) break;
      out.push_back(simple_statement());
    }
    if (at_kind(TokenKind::kNewline)) {
      ++pos_;
    } else if (!at_end() && !at_kind(TokenKind::kDedent)) {
      fail("expected end of statement");
    }
  }

  int simple_statement() {
    const Token& t = peek();
    if (t.kind == TokenKind::kKeyword) {
      if (t.text == "return") {
        std::vector<int> c{leaf()};
        if (!statement_end()) c.push_back(expression_list());
        return make("return_statement", std::move(c));
      }
      if (t.text == "pass") return make("pass_statement", {leaf()});
      if (t.text == "break") return make("break_statement", {leaf()});
      if (t.text == "continue") return make("continue_statement", {leaf()});
      if (t.text == "raise") {
        std::vector<int> c{leaf()};
        if (!statement_end()) {
          c.push_back(expression());
          if (at_keyword("from")) {
            c.push_back(leaf());
            c.push_back(expression());
          }
        }
        return make("raise_statement", std::move(c));
      }
      if (t.text == "assert") {
        std::vector<int> c{leaf(), expression()};
        if (at_punct(",")) {
          c.push_back(leaf());
          c.push_back(expression());
        }
        return make("assert_statement", std::move(c));
      }
      if (t.text == "del") return make("delete_statement", {leaf(), expression_list()});
      if (t.text == "global" || t.text == "nonlocal") {
        const std::string type = t.text == "global" ? "global_statement" : "nonlocal_statement";
        std::vector<int> c{leaf(), expect_identifier()};
        while (at_punct(",")) {
          c.push_back(leaf());
          c.push_back(expect_identifier());
        }
        return make(type, std::move(c));
      }
      if (t.text == "import") {
        std::vector<int> c{leaf(), aliased_import()};
        while (at_punct(",")) {
          c.push_back(leaf());
          c.push_back(aliased_import());
        }
        return make("import_statement", std::move(c));
      }
      if (t.text == "from") {
        std::vector<int> c{leaf(), dotted_name(), expect_keyword("import")};
        if (at_punct("*")) {
          c.push_back(make("wildcard_import", {leaf()}));
        } else {
          const bool paren = at_punct("(");
          if (paren) c.push_back(leaf());
          c.push_back(aliased_import());
          while (at_punct(",")) {
            c.push_back(leaf());
            if (paren && at_punct(")")) break;
            c.push_back(aliased_import());
          }
          if (paren) c.push_back(expect_punct(")"));
        }
        return make("import_from_statement", std::move(c));
      }
    }
    return expression_statement();
  }

  bool statement_end() const {
    return at_kind(TokenKind::kNewline) || at_end() || at_punct(";") || at_kind(TokenKind::kDedent);
  }

  int dotted_name() {
    std::vector<int> c{expect_identifier()};
    while (at_punct(".")) {
      c.push_back(leaf());
      c.push_back(expect_identifier());
    }
    return make("dotted_name", std::move(c));
  }

  int aliased_import() {
    const int name = dotted_name();
    if (!at_keyword("as")) return name;
    return make("aliased_import", {name, leaf(), expect_identifier()});
  }

  int expression_statement() {
    int lhs = at_keyword("yield") ? yield_expression() : expression_list();
    if (at_punct(":")) {
      // annotated assignment
      std::vector<int> c{lhs, leaf(), make("type", {expression()})};
      if (at_punct("=")) {
        c.push_back(leaf());
        c.push_back(assignment_rhs());
      }
      return make("expression_statement", {make("assignment", std::move(c))});
    }
    if (at_punct("=")) return make("expression_statement", {assignment_tail(lhs)});
    static constexpr std::string_view kAug[] = {"+=", "-=", "*=", "/=", "//=", "%=", "**=", ">>=", "<<=", "&=", "^=", "|="};
    for (auto op : kAug) {
      if (at_punct(op)) {
        const int o = leaf();
        return make("expression_statement", {make("augmented_assignment", {lhs, o, assignment_rhs()})});
      }
    }
    return make("expression_statement", {lhs});
  }

  int assignment_tail(int lhs) {
    const int eq = leaf();
    int rhs = assignment_rhs();
    if (at_punct("=")) rhs = assignment_tail(rhs);
    return make("assignment", {lhs, eq, rhs});
  }

  int assignment_rhs() { return at_keyword("yield") ? yield_expression() : expression_list(); }

  int yield_expression() {
    std::vector<int> c{leaf()};
    if (at_keyword("from")) {
      c.push_back(leaf());
      c.push_back(expression());
    } else if (!statement_end() && !at_punct(")")) {
      c.push_back(expression_list());
    }
    return make("yield", std::move(c));
  }

  int block() {
    if (!at_kind(TokenKind::kNewline)) {
      std::vector<int> body;
      simple_statements(body);
      return make("block", std::move(body));
    }
    ++pos_;
    expect_kind(TokenKind::kIndent, "indented block");
    std::vector<int> body;
    while (!at_kind(TokenKind::kDedent) && !at_end()) {
      statement(body);
      while (at_kind(TokenKind::kNewline)) ++pos_;
    }
    if (at_kind(TokenKind::kDedent)) ++pos_;
    return make("block", std::move(body));
  }

  int decorated_definition() {
    std::vector<int> c;
    while (at_punct("@")) {
      const int at = leaf();
      c.push_back(make("decorator", {at, expression()}));
      expect_kind(TokenKind::kNewline, "newline after decorator");
    }
    if (at_keyword("class")) {
      c.push_back(class_definition());
    } else {
      c.push_back(function_definition());
    }
    return make("decorated_definition", std::move(c));
  }

  int function_definition() {
    std::vector<int> c;
    if (at_keyword("async")) c.push_back(leaf());
    c.push_back(expect_keyword("def"));
    c.push_back(expect_identifier());
    c.push_back(parameters());
    if (at_punct("->")) {
      c.push_back(leaf());
      c.push_back(make("type", {expression()}));
    }
    c.push_back(expect_punct(":"));
    c.push_back(block());
    return make("function_definition", std::move(c));
  }

  int class_definition() {
    std::vector<int> c{expect_keyword("class"), expect_identifier()};
    if (at_punct("(")) c.push_back(argument_list());
    c.push_back(expect_punct(":"));
    c.push_back(block());
    return make("class_definition", std::move(c));
  }

  int parameters() {
    std::vector<int> c{expect_punct("(")};
    while (!at_punct(")")) {
      c.push_back(parameter(/*lambda=*/false));
      if (!at_punct(",")) break;
      c.push_back(leaf());
    }
    c.push_back(expect_punct(")"));
    return make("parameters", std::move(c));
  }

  int parameter(bool in_lambda) {
    if (at_punct("*") || at_punct("**")) {
      const bool dict = at_punct("**");
      const int star = leaf();
      if (!dict && (at_punct(",") || at_punct(")"))) return make("keyword_separator", {star});
      return make(dict ? "dictionary_splat_pattern" : "list_splat_pattern", {star, expect_identifier()});
    }
    if (at_punct("/")) return make("positional_separator", {leaf()});
    const int name = expect_identifier();
    int type_node = -1;
    int colon = -1;
    if (!in_lambda && at_punct(":")) {
      colon = leaf();
      type_node = make("type", {expression()});
    }
    if (at_punct("=")) {
      const int eq = leaf();
      const int value = expression();
      if (type_node >= 0) return make("typed_default_parameter", {name, colon, type_node, eq, value});
      return make("default_parameter", {name, eq, value});
    }
    if (type_node >= 0) return make("typed_parameter", {name, colon, type_node});
    return name;
  }

  int if_statement() {
    std::vector<int> c{leaf(), expression(), expect_punct(":"), block()};
    while (at_keyword("elif")) {
      c.push_back(make("elif_clause", {leaf(), expression(), expect_punct(":"), block()}));
    }
    if (at_keyword("else")) c.push_back(else_clause());
    return make("if_statement", std::move(c));
  }

  int else_clause() { return make("else_clause", {leaf(), expect_punct(":"), block()}); }

  int for_statement() {
    std::vector<int> c{leaf(), target_list(), expect_keyword("in"), expression_list(), expect_punct(":"), block()};
    if (at_keyword("else")) c.push_back(else_clause());
    return make("for_statement", std::move(c));
  }

  int while_statement() {
    std::vector<int> c{leaf(), expression(), expect_punct(":"), block()};
    if (at_keyword("else")) c.push_back(else_clause());
    return make("while_statement", std::move(c));
  }

  int try_statement() {
    std::vector<int> c{leaf(), expect_punct(":"), block()};
    while (at_keyword("except")) {
      std::vector<int> e{leaf()};
      if (!at_punct(":")) {
        e.push_back(expression());
        if (at_keyword("as")) {
          e.push_back(leaf());
          e.push_back(expect_identifier());
        }
      }
      e.push_back(expect_punct(":"));
      e.push_back(block());
      c.push_back(make("except_clause", std::move(e)));
    }
    if (at_keyword("else")) c.push_back(else_clause());
    if (at_keyword("finally")) c.push_back(make("finally_clause", {leaf(), expect_punct(":"), block()}));
    if (c.size() == 3) fail("try without except or finally");
    return make("try_statement", std::move(c));
  }

  int with_statement() {
    std::vector<int> c{leaf()};
    std::vector<int> items;
    while (true) {
      std::vector<int> item{expression()};
      if (at_keyword("as")) {
        item.push_back(leaf());
        item.push_back(target());
      }
      items.push_back(make("with_item", std::move(item)));
      if (!at_punct(",")) break;
      items.push_back(leaf());
    }
    c.push_back(make("with_clause", std::move(items)));
    c.push_back(expect_punct(":"));
    c.push_back(block());
    return make("with_statement", std::move(c));
  }

  // ---- targets ------------------------------------------------------------

  int target() {
    if (at_punct("*")) return make("list_splat_pattern", {leaf(), target()});
    if (at_punct("(")) {
      std::vector<int> c{leaf()};
      while (!at_punct(")")) {
        c.push_back(target());
        if (!at_punct(",")) break;
        c.push_back(leaf());
      }
      c.push_back(expect_punct(")"));
      return make("tuple_pattern", std::move(c));
    }
    return primary();
  }

  int target_list() {
    const int first = target();
    if (!at_punct(",")) return first;
    std::vector<int> c{first};
    while (at_punct(",")) {
      c.push_back(leaf());
      if (at_keyword("in")) break;
      c.push_back(target());
    }
    return make("pattern_list", std::move(c));
  }

  // ---- expressions --------------------------------------------------------

  int expression_list() {
    const int first = expression_or_splat();
    if (!at_punct(",")) return first;
    std::vector<int> c{first};
    while (at_punct(",")) {
      c.push_back(leaf());
      if (statement_end() || at_punct("=") || at_punct(")") || at_punct(":")) break;
      c.push_back(expression_or_splat());
    }
    return make("expression_list", std::move(c));
  }

  int expression_or_splat() {
    if (at_punct("*")) return make("list_splat", {leaf(), expression()});
    return expression();
  }

  int expression() {
    if (at_keyword("lambda")) return lambda();
    const int value = or_test();
    if (at_keyword("if")) {
      const int kw_if = leaf();
      const int cond = or_test();
      const int kw_else = expect_keyword("else");
      return make("conditional_expression", {value, kw_if, cond, kw_else, expression()});
    }
    if (at_punct(":=")) {
      const int op = leaf();
      return make("named_expression", {value, op, expression()});
    }
    return value;
  }

  int lambda() {
    std::vector<int> c{leaf()};
    if (!at_punct(":")) {
      std::vector<int> params;
      while (true) {
        params.push_back(parameter(/*lambda=*/true));
        if (!at_punct(",")) break;
        params.push_back(leaf());
      }
      c.push_back(make("lambda_parameters", std::move(params)));
    }
    c.push_back(expect_punct(":"));
    c.push_back(expression());
    return make("lambda", std::move(c));
  }

  int or_test() {
    int lhs = and_test();
    while (at_keyword("or")) {
      const int op = leaf();
      lhs = make("boolean_operator", {lhs, op, and_test()});
    }
    return lhs;
  }

  int and_test() {
    int lhs = not_test();
    while (at_keyword("and")) {
      const int op = leaf();
      lhs = make("boolean_operator", {lhs, op, not_test()});
    }
    return lhs;
  }

  int not_test() {
    if (at_keyword("not")) {
      const int op = leaf();
      return make("not_operator", {op, not_test()});
    }
    return comparison();
  }

  bool at_comparison_op() const {
    static constexpr std::string_view kOps[] = {"<", ">", "==", ">=", "<=", "!="};
    for (auto op : kOps)
      if (at_punct(op)) return true;
    return at_keyword("in") || at_keyword("is") || (at_keyword("not") && at_keyword("in", 1));
  }

  int comparison() {
    const int first = bitwise_or();
    if (!at_comparison_op()) return first;
    std::vector<int> c{first};
    while (at_comparison_op()) {
      if (at_keyword("not") || (at_keyword("is") && at_keyword("not", 1))) {
        c.push_back(leaf());
        c.push_back(leaf());
      } else {
        c.push_back(leaf());
      }
      c.push_back(bitwise_or());
    }
    return make("comparison_operator", std::move(c));
  }

  template <typename Next>
  int binary_level(std::initializer_list<std::string_view> ops, Next next) {
    int lhs = (this->*next)();
    while (at_any_punct(ops)) {
      const int op = leaf();
      lhs = make("binary_operator", {lhs, op, (this->*next)()});
    }
    return lhs;
  }

  int bitwise_or() { return binary_level({"|"}, &PythonParser::bitwise_xor); }
  int bitwise_xor() { return binary_level({"^"}, &PythonParser::bitwise_and); }
  int bitwise_and() { return binary_level({"&"}, &PythonParser::shift); }
  int shift() { return binary_level({"<<", ">>"}, &PythonParser::arith); }
  int arith() { return binary_level({"+", "-"}, &PythonParser::term); }
  int term() { return binary_level({"*", "/", "//", "%", "@"}, &PythonParser::factor); }

  int factor() {
    if (at_any_punct({"+", "-", "~"})) {
      const int op = leaf();
      return make("unary_operator", {op, factor()});
    }
    return power();
  }

  int power() {
    int base;
    if (at_keyword("await")) {
      const int kw = leaf();
      base = make("await", {kw, primary()});
    } else {
      base = primary();
    }
    if (at_punct("**")) {
      const int op = leaf();
      return make("binary_operator", {base, op, factor()});
    }
    return base;
  }

  int primary() {
    int node = atom();
    while (true) {
      if (at_punct(".")) {
        const int dot = leaf();
        node = make("attribute", {node, dot, expect_identifier()});
      } else if (at_punct("(")) {
        node = make("call", {node, argument_list()});
      } else if (at_punct("[")) {
        std::vector<int> c{node, leaf()};
        c.push_back(subscript_item());
        while (at_punct(",")) {
          c.push_back(leaf());
          if (at_punct("]")) break;
          c.push_back(subscript_item());
        }
        c.push_back(expect_punct("]"));
        node = make("subscript", std::move(c));
      } else {
        return node;
      }
    }
  }

  int subscript_item() {
    std::vector<int> parts;
    if (!at_punct(":")) {
      const int e = expression();
      if (!at_punct(":")) return e;
      parts.push_back(e);
    }
    while (at_punct(":")) {
      parts.push_back(leaf());
      if (!at_punct(":") && !at_punct("]") && !at_punct(",")) parts.push_back(expression());
    }
    return make("slice", std::move(parts));
  }

  int argument_list() {
    std::vector<int> c{expect_punct("(")};
    while (!at_punct(")")) {
      if (at_punct("*") || at_punct("**")) {
        const bool dict = at_punct("**");
        const int star = leaf();
        c.push_back(make(dict ? "dictionary_splat" : "list_splat", {star, expression()}));
      } else if (at_kind(TokenKind::kIdentifier) && at_punct("=", 1)) {
        const int name = expect_identifier();
        const int eq = leaf();
        c.push_back(make("keyword_argument", {name, eq, expression()}));
      } else {
        const int e = expression();
        if (at_keyword("for")) {
          std::vector<int> g{e};
          comprehension_clauses(g);
          c.push_back(make("generator_expression", std::move(g)));
        } else {
          c.push_back(e);
        }
      }
      if (!at_punct(",")) break;
      c.push_back(leaf());
    }
    c.push_back(expect_punct(")"));
    return make("argument_list", std::move(c));
  }

  void comprehension_clauses(std::vector<int>& c) {
    while (at_keyword("for") || at_keyword("if")) {
      if (at_keyword("for")) {
        const int kw = leaf();
        const int tgt = target_list();
        const int in = expect_keyword("in");
        c.push_back(make("for_in_clause", {kw, tgt, in, or_test()}));
      } else {
        const int kw = leaf();
        c.push_back(make("if_clause", {kw, or_test()}));
      }
    }
  }

  int atom() {
    const Token& t = peek();
    switch (t.kind) {
      case TokenKind::kIdentifier:
        return leaf("identifier");
      case TokenKind::kNumber:
        return leaf(is_float_literal(t.text) ? "float" : "integer");
      case TokenKind::kString: {
        const int first = leaf("string");
        if (!at_kind(TokenKind::kString)) return first;
        std::vector<int> c{first};
        while (at_kind(TokenKind::kString)) c.push_back(leaf("string"));
        return make("concatenated_string", std::move(c));
      }
      case TokenKind::kKeyword:
        if (t.text == "True") return leaf("true");
        if (t.text == "False") return leaf("false");
        if (t.text == "None") return leaf("none");
        if (t.text == "lambda") return lambda();
        fail("unexpected keyword");
      case TokenKind::kPunct:
        if (t.text == "(") return parenthesized();
        if (t.text == "[") return bracketed();
        if (t.text == "{") return braced();
        if (t.text == "...") return leaf("ellipsis");
        fail("unexpected token");
      default:
        fail("expected expression");
    }
  }

  int parenthesized() {
    const int open = leaf();
    if (at_punct(")")) return make("tuple", {open, leaf()});
    const int first = at_keyword("yield") ? yield_expression() : expression_or_splat();
    if (at_keyword("for")) {
      std::vector<int> c{open, first};
      comprehension_clauses(c);
      c.push_back(expect_punct(")"));
      return make("generator_expression", std::move(c));
    }
    if (at_punct(")")) return make("parenthesized_expression", {open, first, leaf()});
    std::vector<int> c{open, first};
    while (at_punct(",")) {
      c.push_back(leaf());
      if (at_punct(")")) break;
      c.push_back(expression_or_splat());
    }
    c.push_back(expect_punct(")"));
    return make("tuple", std::move(c));
  }

  int bracketed() {
    std::vector<int> c{leaf()};
    if (!at_punct("]")) {
      c.push_back(expression_or_splat());
      if (at_keyword("for")) {
        comprehension_clauses(c);
        c.push_back(expect_punct("]"));
        return make("list_comprehension", std::move(c));
      }
      while (at_punct(",")) {
        c.push_back(leaf());
        if (at_punct("]")) break;
        c.push_back(expression_or_splat());
      }
    }
    c.push_back(expect_punct("]"));
    return make("list", std::move(c));
  }

  int braced() {
    std::vector<int> c{leaf()};
    if (at_punct("}")) {
      c.push_back(leaf());
      return make("dictionary", std::move(c));
    }
    bool is_dict = false;
    auto element = [&]() {
      if (at_punct("**")) {
        is_dict = true;
        const int star = leaf();
        return make("dictionary_splat", {star, expression()});
      }
      const int key = expression_or_splat();
      if (at_punct(":")) {
        is_dict = true;
        const int colon = leaf();
        return make("pair", {key, colon, expression()});
      }
      return key;
    };
    c.push_back(element());
    if (at_keyword("for")) {
      comprehension_clauses(c);
      c.push_back(expect_punct("}"));
      return make(is_dict ? "dictionary_comprehension" : "set_comprehension", std::move(c));
    }
    while (at_punct(",")) {
      c.push_back(leaf());
      if (at_punct("}")) break;
      c.push_back(element());
    }
    c.push_back(expect_punct("}"));
    return make(is_dict ? "dictionary" : "set", std::move(c));
  }
};

}  // namespace

SyntaxTree parse_python(std::string_view source) {
  return PythonParser(source, tokenize(source, python_rules())).parse();
}

}  // namespace metatp::corpus::detail
