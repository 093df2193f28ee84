// Recursive-descent adapter for a practical subset of ECMAScript. Node type
// names follow tree-sitter-javascript. Regular-expression literals and
// classes are not supported.

#include "parser_base.hpp"

namespace metatp::corpus::detail {
namespace {

struct BinaryOp {
  std::string_view text;
  int precedence;
  bool keyword;
};

constexpr BinaryOp kBinaryOps[] = {
    {"??", 1, false},  {"||", 2, false},  {"&&", 3, false},         {"|", 4, false},
    {"^", 5, false},   {"&", 6, false},   {"==", 7, false},         {"!=", 7, false},
    {"===", 7, false}, {"!==", 7, false}, {"<", 8, false},          {">", 8, false},
    {"<=", 8, false},  {">=", 8, false},  {"instanceof", 8, true},  {"in", 8, true},
    {"<<", 9, false},  {">>", 9, false},  {">>>", 9, false},        {"+", 10, false},
    {"-", 10, false},  {"*", 11, false},  {"/", 11, false},         {"%", 11, false},
    {"**", 12, false},
};

class JavaScriptParser : public ParserBase {
 public:
  using ParserBase::ParserBase;

  SyntaxTree parse() {
    std::vector<int> body;
    while (!at_end()) body.push_back(statement());
    if (body.empty()) fail("empty program");
    return finish(make("program", std::move(body)));
  }

 private:
  // ---- statements ---------------------------------------------------------

  void optional_semicolon(std::vector<int>& c) {
    if (at_punct(";")) {
      c.push_back(leaf());
      return;
    }
    // automatic semicolon insertion
    if (at_end() || at_punct("}") || peek().newline_before) return;
    fail("expected ';'");
  }

  int statement() {
    const Token& t = peek();
    if (at_punct("{")) return statement_block();
    if (at_punct(";")) return make("empty_statement", {leaf()});
    if (t.kind == TokenKind::kKeyword) {
      const std::string_view kw = t.text;
      if (kw == "function" && at_kind(TokenKind::kIdentifier, 1)) return function_declaration();
      if (kw == "async" && at_keyword("function", 1) && at_kind(TokenKind::kIdentifier, 2)) return function_declaration();
      if (kw == "return") return return_statement();
      if (kw == "if") return if_statement();
      if (kw == "for") return for_statement();
      if (kw == "while") return make("while_statement", {leaf(), parenthesized_expression(), statement()});
      if (kw == "do") {
        std::vector<int> c{leaf(), statement(), expect_keyword("while"), parenthesized_expression()};
        optional_semicolon(c);
        return make("do_statement", std::move(c));
      }
      if (kw == "var" || kw == "let" || kw == "const") {
        std::vector<int> c = declaration_items();
        optional_semicolon(c);
        return make(kw == "var" ? "variable_declaration" : "lexical_declaration", std::move(c));
      }
      if (kw == "throw") {
        std::vector<int> c{leaf(), expression()};
        optional_semicolon(c);
        return make("throw_statement", std::move(c));
      }
      if (kw == "try") return try_statement();
      if (kw == "break" || kw == "continue") {
        const std::string type = kw == "break" ? "break_statement" : "continue_statement";
        std::vector<int> c{leaf()};
        if (at_kind(TokenKind::kIdentifier) && !peek().newline_before) c.push_back(leaf("statement_identifier"));
        optional_semicolon(c);
        return make(type, std::move(c));
      }
      if (kw == "switch") return switch_statement();
    }
    std::vector<int> c{expression()};
    optional_semicolon(c);
    return make("expression_statement", std::move(c));
  }

  int statement_block() {
    std::vector<int> c{expect_punct("{")};
    while (!at_punct("}")) {
      if (at_end()) fail("unterminated block");
      c.push_back(statement());
    }
    c.push_back(leaf());
    return make("statement_block", std::move(c));
  }

  std::vector<int> declaration_items() {
    std::vector<int> c{leaf()};
    while (true) {
      std::vector<int> d{binding_target()};
      if (at_punct("=")) {
        d.push_back(leaf());
        d.push_back(assignment());
      }
      c.push_back(make("variable_declarator", std::move(d)));
      if (!at_punct(",")) break;
      c.push_back(leaf());
    }
    return c;
  }

  int binding_target() {
    if (at_punct("{")) return object("object_pattern");
    if (at_punct("[")) return array("array_pattern");
    return expect_identifier();
  }

  int function_declaration() {
    std::vector<int> c;
    if (at_keyword("async")) c.push_back(leaf());
    c.push_back(expect_keyword("function"));
    if (at_punct("*")) c.push_back(leaf());
    c.push_back(expect_identifier());
    c.push_back(formal_parameters());
    c.push_back(statement_block());
    return make("function_declaration", std::move(c));
  }

  int return_statement() {
    std::vector<int> c{leaf()};
    if (!at_punct(";") && !at_punct("}") && !at_end() && !peek().newline_before) c.push_back(expression());
    optional_semicolon(c);
    return make("return_statement", std::move(c));
  }

  int if_statement() {
    std::vector<int> c{leaf(), parenthesized_expression(), statement()};
    if (at_keyword("else")) {
      const int kw = leaf();
      c.push_back(make("else_clause", {kw, statement()}));
    }
    return make("if_statement", std::move(c));
  }

  int for_statement() {
    std::vector<int> c{leaf(), expect_punct("(")};
    // for (const x of xs) / for (key in obj)
    const bool decl = at_keyword("const") || at_keyword("let") || at_keyword("var");
    const std::size_t name_at = decl ? 1 : 0;
    if ((at_kind(TokenKind::kIdentifier, name_at) || at_punct("{", name_at) || at_punct("[", name_at)) &&
        (at_keyword("of", name_at + 1) || at_keyword("in", name_at + 1))) {
      if (decl) c.push_back(leaf());
      c.push_back(binding_target());
      c.push_back(leaf());
      c.push_back(expression());
      c.push_back(expect_punct(")"));
      c.push_back(statement());
      return make("for_in_statement", std::move(c));
    }
    if (decl) {
      std::vector<int> d = declaration_items();
      d.push_back(expect_punct(";"));
      const bool is_var = type_of(d.front()) == "var";
      c.push_back(make(is_var ? "variable_declaration" : "lexical_declaration", std::move(d)));
    } else if (at_punct(";")) {
      c.push_back(make("empty_statement", {leaf()}));
    } else {
      const int e = expression();
      c.push_back(make("expression_statement", {e, expect_punct(";")}));
    }
    if (at_punct(";")) {
      c.push_back(make("empty_statement", {leaf()}));
    } else {
      const int e = expression();
      c.push_back(make("expression_statement", {e, expect_punct(";")}));
    }
    if (!at_punct(")")) c.push_back(expression());
    c.push_back(expect_punct(")"));
    c.push_back(statement());
    return make("for_statement", std::move(c));
  }

  int try_statement() {
    std::vector<int> c{leaf(), statement_block()};
    if (at_keyword("catch")) {
      std::vector<int> k{leaf()};
      if (at_punct("(")) {
        k.push_back(leaf());
        k.push_back(binding_target());
        k.push_back(expect_punct(")"));
      }
      k.push_back(statement_block());
      c.push_back(make("catch_clause", std::move(k)));
    }
    if (at_keyword("finally")) {
      const int kw = leaf();
      c.push_back(make("finally_clause", {kw, statement_block()}));
    }
    if (c.size() == 2) fail("try without catch or finally");
    return make("try_statement", std::move(c));
  }

  int switch_statement() {
    std::vector<int> c{leaf(), parenthesized_expression()};
    std::vector<int> body{expect_punct("{")};
    while (!at_punct("}")) {
      std::vector<int> k;
      std::string type;
      if (at_keyword("case")) {
        type = "switch_case";
        k.push_back(leaf());
        k.push_back(expression());
      } else if (at_keyword("default")) {
        type = "switch_default";
        k.push_back(leaf());
      } else {
        fail("expected case");
      }
      k.push_back(expect_punct(":"));
      while (!at_keyword("case") && !at_keyword("default") && !at_punct("}")) k.push_back(statement());
      body.push_back(make(type, std::move(k)));
    }
    body.push_back(leaf());
    c.push_back(make("switch_body", std::move(body)));
    return make("switch_statement", std::move(c));
  }

  int parenthesized_expression() {
    const int open = expect_punct("(");
    const int e = expression();
    return make("parenthesized_expression", {open, e, expect_punct(")")});
  }

  int formal_parameters() {
    std::vector<int> c{expect_punct("(")};
    while (!at_punct(")")) {
      if (at_punct("...")) {
        const int dots = leaf();
        c.push_back(make("rest_pattern", {dots, binding_target()}));
      } else {
        const int target = binding_target();
        if (at_punct("=")) {
          const int eq = leaf();
          c.push_back(make("assignment_pattern", {target, eq, assignment()}));
        } else {
          c.push_back(target);
        }
      }
      if (!at_punct(",")) break;
      c.push_back(leaf());
    }
    c.push_back(expect_punct(")"));
    return make("formal_parameters", std::move(c));
  }

  // ---- expressions --------------------------------------------------------

  int expression() {
    const int first = assignment();
    if (!at_punct(",")) return first;
    std::vector<int> c{first};
    while (at_punct(",")) {
      c.push_back(leaf());
      c.push_back(assignment());
    }
    return make("sequence_expression", std::move(c));
  }

  // True when the tokens at the cursor start an arrow function.
  bool arrow_ahead() const {
    std::size_t k = at_keyword("async") ? 1 : 0;
    if (at_kind(TokenKind::kIdentifier, k)) return at_punct("=>", k + 1);
    if (!at_punct("(", k)) return false;
    int depth = 0;
    for (std::size_t i = k;; ++i) {
      const Token& t = peek(i);
      if (t.kind == TokenKind::kEnd) return false;
      if (t.kind != TokenKind::kPunct) continue;
      if (t.text == "(" || t.text == "[" || t.text == "{") ++depth;
      if (t.text == ")" || t.text == "]" || t.text == "}") {
        if (--depth == 0) return at_punct("=>", i + 1);
      }
    }
  }

  int arrow_function() {
    std::vector<int> c;
    if (at_keyword("async")) c.push_back(leaf());
    c.push_back(at_kind(TokenKind::kIdentifier) ? expect_identifier() : formal_parameters());
    c.push_back(expect_punct("=>"));
    c.push_back(at_punct("{") ? statement_block() : assignment());
    return make("arrow_function", std::move(c));
  }

  int assignment() {
    if (arrow_ahead()) return arrow_function();
    if (at_keyword("yield")) {
      std::vector<int> c{leaf()};
      if (!at_punct(")") && !at_punct(";") && !at_punct("}") && !at_punct(",") && !peek().newline_before)
        c.push_back(assignment());
      return make("yield_expression", std::move(c));
    }
    const int lhs = ternary();
    if (at_punct("=")) {
      const int eq = leaf();
      return make("assignment_expression", {lhs, eq, assignment()});
    }
    static constexpr std::string_view kAug[] = {"+=", "-=", "*=", "/=", "%=", "**=", "<<=", ">>=", ">>>=",
                                                 "&=", "|=", "^=", "&&=", "||=", "?\?="};
    for (auto op : kAug) {
      if (at_punct(op)) {
        const int o = leaf();
        return make("augmented_assignment_expression", {lhs, o, assignment()});
      }
    }
    return lhs;
  }

  int ternary() {
    const int cond = binary(1);
    if (!at_punct("?")) return cond;
    const int q = leaf();
    const int yes = assignment();
    const int colon = expect_punct(":");
    return make("ternary_expression", {cond, q, yes, colon, assignment()});
  }

  const BinaryOp* current_binary_op() const {
    const Token& t = peek();
    if (t.kind != TokenKind::kPunct && t.kind != TokenKind::kKeyword) return nullptr;
    for (const auto& op : kBinaryOps) {
      if (op.text == t.text && op.keyword == (t.kind == TokenKind::kKeyword)) return &op;
    }
    return nullptr;
  }

  int binary(int min_prec) {
    int lhs = unary();
    while (const BinaryOp* op = current_binary_op()) {
      if (op->precedence < min_prec) break;
      const int o = leaf();
      const int next = op->text == "**" ? op->precedence : op->precedence + 1;
      lhs = make("binary_expression", {lhs, o, binary(next)});
    }
    return lhs;
  }

  int unary() {
    if (at_any_punct({"!", "~", "+", "-"}) || at_keyword("typeof") || at_keyword("void") || at_keyword("delete")) {
      const int op = leaf();
      return make("unary_expression", {op, unary()});
    }
    if (at_any_punct({"++", "--"})) {
      const int op = leaf();
      return make("update_expression", {op, unary()});
    }
    if (at_keyword("await")) {
      const int kw = leaf();
      return make("await_expression", {kw, unary()});
    }
    const int operand = call_member(/*allow_call=*/true);
    if (at_any_punct({"++", "--"}) && !peek().newline_before) {
      const int op = leaf();
      return make("update_expression", {operand, op});
    }
    return operand;
  }

  int property_name() {
    if (at_kind(TokenKind::kIdentifier) || at_kind(TokenKind::kKeyword)) return leaf("property_identifier");
    fail("expected property name");
  }

  int call_member(bool allow_call) {
    int node = at_keyword("new") ? new_expression() : primary();
    while (true) {
      if (at_punct(".") || at_punct("?.")) {
        const int dot = leaf();
        if (at_punct("(") && allow_call) {
          node = make("call_expression", {node, dot, arguments()});
          continue;
        }
        node = make("member_expression", {node, dot, property_name()});
      } else if (at_punct("[")) {
        const int open = leaf();
        const int index = expression();
        node = make("subscript_expression", {node, open, index, expect_punct("]")});
      } else if (allow_call && at_punct("(")) {
        node = make("call_expression", {node, arguments()});
      } else if (allow_call && at_kind(TokenKind::kString) && peek().text.front() == '`') {
        node = make("call_expression", {node, leaf("template_string")});
      } else {
        return node;
      }
    }
  }

  int new_expression() {
    std::vector<int> c{leaf(), call_member(/*allow_call=*/false)};
    if (at_punct("(")) c.push_back(arguments());
    return make("new_expression", std::move(c));
  }

  int arguments() {
    std::vector<int> c{expect_punct("(")};
    while (!at_punct(")")) {
      if (at_punct("...")) {
        const int dots = leaf();
        c.push_back(make("spread_element", {dots, assignment()}));
      } else {
        c.push_back(assignment());
      }
      if (!at_punct(",")) break;
      c.push_back(leaf());
    }
    c.push_back(expect_punct(")"));
    return make("arguments", std::move(c));
  }

  int primary() {
    const Token& t = peek();
    switch (t.kind) {
      case TokenKind::kIdentifier:
        return leaf("identifier");
      case TokenKind::kNumber:
        return leaf("number");
      case TokenKind::kString:
        return leaf(t.text.front() == '`' ? "template_string" : "string");
      case TokenKind::kKeyword:
        if (t.text == "this") return leaf("this");
        if (t.text == "true") return leaf("true");
        if (t.text == "false") return leaf("false");
        if (t.text == "null") return leaf("null");
        if (t.text == "function" || (t.text == "async" && at_keyword("function", 1))) return function_expression();
        fail("unexpected keyword");
      case TokenKind::kPunct:
        if (t.text == "(") return parenthesized_expression();
        if (t.text == "[") return array("array");
        if (t.text == "{") return object("object");
        fail("unexpected token");
      default:
        fail("expected expression");
    }
  }

  int function_expression() {
    std::vector<int> c;
    if (at_keyword("async")) c.push_back(leaf());
    c.push_back(expect_keyword("function"));
    if (at_punct("*")) c.push_back(leaf());
    if (at_kind(TokenKind::kIdentifier)) c.push_back(expect_identifier());
    c.push_back(formal_parameters());
    c.push_back(statement_block());
    return make("function_expression", std::move(c));
  }

  int array(const std::string& type) {
    std::vector<int> c{leaf()};
    while (!at_punct("]")) {
      if (at_punct(",")) {
        c.push_back(leaf());
        continue;
      }
      if (at_punct("...")) {
        const int dots = leaf();
        c.push_back(make("spread_element", {dots, assignment()}));
      } else {
        c.push_back(assignment());
      }
      if (!at_punct(",")) break;
      c.push_back(leaf());
    }
    c.push_back(expect_punct("]"));
    return make(type, std::move(c));
  }

  int object(const std::string& type) {
    std::vector<int> c{leaf()};
    while (!at_punct("}")) {
      if (at_punct("...")) {
        const int dots = leaf();
        c.push_back(make("spread_element", {dots, assignment()}));
      } else {
        int key;
        if (at_kind(TokenKind::kString)) {
          key = leaf("string");
        } else if (at_kind(TokenKind::kNumber)) {
          key = leaf("number");
        } else if (at_punct("[")) {
          const int open = leaf();
          const int e = assignment();
          key = make("computed_property_name", {open, e, expect_punct("]")});
        } else if (at_kind(TokenKind::kIdentifier) && (at_punct(",", 1) || at_punct("}", 1) || at_punct("=", 1))) {
          key = leaf(type == "object" ? "shorthand_property_identifier" : "shorthand_property_identifier_pattern");
          if (at_punct("=")) {
            const int eq = leaf();
            key = make("object_assignment_pattern", {key, eq, assignment()});
          }
          c.push_back(key);
          if (!at_punct(",")) break;
          c.push_back(leaf());
          continue;
        } else {
          key = property_name();
        }
        if (at_punct("(")) {
          const int params = formal_parameters();
          c.push_back(make("method_definition", {key, params, statement_block()}));
        } else {
          const int colon = expect_punct(":");
          c.push_back(make("pair", {key, colon, assignment()}));
        }
      }
      if (!at_punct(",")) break;
      c.push_back(leaf());
    }
    c.push_back(expect_punct("}"));
    return make(type, std::move(c));
  }
};

}  // namespace

SyntaxTree parse_javascript(std::string_view source) {
  return JavaScriptParser(source, tokenize(source, javascript_rules())).parse();
}

}  // namespace metatp::corpus::detail
