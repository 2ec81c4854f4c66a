#include <sstream>

#include "sqled/error.h"
#include "sqled/sql.h"

namespace sqled {

namespace {

AstNode node(std::string label) {
  AstNode n;
  n.label = std::move(label);
  return n;
}

class Parser {
 public:
  explicit Parser(const std::vector<SqlToken>& tokens) : toks_(tokens) {}

  AstNode parse_statement() {
    AstNode stmt = select_stmt();
    if (peek_symbol(";")) stmt.children.push_back(take());
    if (pos_ != toks_.size()) fail("end of query");
    return stmt;
  }

 private:
  const std::vector<SqlToken>& toks_;
  std::size_t pos_ = 0;

  // --- token helpers ------------------------------------------------------

  bool at_end() const { return pos_ >= toks_.size(); }
  const SqlToken* cur() const { return at_end() ? nullptr : &toks_[pos_]; }
  const SqlToken* ahead(std::size_t k) const {
    return pos_ + k < toks_.size() ? &toks_[pos_ + k] : nullptr;
  }
  bool peek_kw(std::string_view kw, std::size_t k = 0) const {
    const auto* t = ahead(k);
    return t && t->is(kw);
  }
  bool peek_symbol(std::string_view s, std::size_t k = 0) const {
    const auto* t = ahead(k);
    return t && t->is_symbol(s);
  }
  bool peek_kind(TokenKind kind, std::size_t k = 0) const {
    const auto* t = ahead(k);
    return t && t->kind == kind;
  }

  AstNode take() {
    AstNode leaf;
    leaf.token = static_cast<int>(pos_++);
    return leaf;
  }

  [[noreturn]] void fail(const std::string& expected) const {
    throw SyntaxError(pos_, expected, at_end() ? "<end>" : "'" + toks_[pos_].text + "'");
  }

  AstNode expect_kw(std::string_view kw) {
    if (!peek_kw(kw)) fail(std::string(kw));
    return take();
  }
  AstNode expect_symbol(std::string_view s) {
    if (!peek_symbol(s)) fail("'" + std::string(s) + "'");
    return take();
  }
  AstNode name_node(const char* label) {
    if (!peek_kind(TokenKind::kIdentifier)) fail(label);
    AstNode n = node(label);
    n.children.push_back(take());
    return n;
  }

  // --- statements ---------------------------------------------------------

  AstNode select_stmt() {
    AstNode stmt = node("select_stmt");
    AstNode body = select_core();
    while (peek_kw("UNION") || peek_kw("INTERSECT") || peek_kw("EXCEPT")) {
      AstNode compound = node("compound_select");
      AstNode op = node("compound_operator");
      const bool is_union = peek_kw("UNION");
      op.children.push_back(take());
      if (is_union && peek_kw("ALL")) op.children.push_back(take());
      compound.children.push_back(std::move(body));
      compound.children.push_back(std::move(op));
      compound.children.push_back(select_core());
      body = std::move(compound);
    }
    stmt.children.push_back(std::move(body));
    if (peek_kw("ORDER BY")) stmt.children.push_back(order_by_clause());
    if (peek_kw("LIMIT")) stmt.children.push_back(limit_clause());
    return stmt;
  }

  AstNode select_core() {
    AstNode core = node("select_core");
    core.children.push_back(expect_kw("SELECT"));
    if (peek_kw("DISTINCT") || peek_kw("ALL")) core.children.push_back(take());
    core.children.push_back(result_clause());
    if (peek_kw("FROM")) core.children.push_back(from_clause());
    if (peek_kw("WHERE")) {
      AstNode where = node("where_clause");
      where.children.push_back(take());
      where.children.push_back(expr());
      core.children.push_back(std::move(where));
    }
    if (peek_kw("GROUP BY")) core.children.push_back(group_by_clause());
    return core;
  }

  AstNode result_clause() {
    AstNode clause = node("result_clause");
    clause.children.push_back(result_column());
    while (peek_symbol(",")) {
      clause.children.push_back(take());
      clause.children.push_back(result_column());
    }
    return clause;
  }

  AstNode result_column() {
    AstNode col = node("result_column");
    if (peek_symbol("*")) {
      col.children.push_back(take());
      return col;
    }
    if (peek_kind(TokenKind::kIdentifier) && peek_symbol(".", 1) && peek_symbol("*", 2)) {
      col.children.push_back(name_node("table_name"));
      col.children.push_back(take());
      col.children.push_back(take());
      return col;
    }
    col.children.push_back(expr());
    if (peek_kw("AS")) {
      col.children.push_back(take());
      if (!peek_kind(TokenKind::kIdentifier) && !peek_kind(TokenKind::kString)) fail("column alias");
      AstNode alias = node("column_alias");
      alias.children.push_back(take());
      col.children.push_back(std::move(alias));
    } else if (peek_kind(TokenKind::kIdentifier)) {
      AstNode alias = node("column_alias");
      alias.children.push_back(take());
      col.children.push_back(std::move(alias));
    }
    return col;
  }

  AstNode table_or_subquery() {
    AstNode t = node("table_or_subquery");
    if (peek_symbol("(")) {
      t.children.push_back(take());
      t.children.push_back(select_stmt());
      t.children.push_back(expect_symbol(")"));
    } else {
      t.children.push_back(name_node("table_name"));
    }
    if (peek_kw("AS")) {
      t.children.push_back(take());
      t.children.push_back(name_node("table_alias"));
    } else if (peek_kind(TokenKind::kIdentifier)) {
      t.children.push_back(name_node("table_alias"));
    }
    return t;
  }

  bool at_join_operator() const {
    return peek_kw("JOIN") || peek_kw("INNER") || peek_kw("LEFT") || peek_kw("CROSS") ||
           peek_kw("NATURAL");
  }

  AstNode join_operator() {
    AstNode op = node("join_operator");
    if (peek_symbol(",")) {
      op.children.push_back(take());
      return op;
    }
    if (peek_kw("NATURAL")) op.children.push_back(take());
    if (peek_kw("LEFT")) {
      op.children.push_back(take());
      if (peek_kw("OUTER")) op.children.push_back(take());
    } else if (peek_kw("INNER") || peek_kw("CROSS")) {
      op.children.push_back(take());
    }
    op.children.push_back(expect_kw("JOIN"));
    return op;
  }

  AstNode join_constraint() {
    AstNode c = node("join_constraint");
    if (peek_kw("ON")) {
      c.children.push_back(take());
      c.children.push_back(expr());
    } else {
      c.children.push_back(expect_kw("USING"));
      c.children.push_back(expect_symbol("("));
      c.children.push_back(name_node("column_name"));
      while (peek_symbol(",")) {
        c.children.push_back(take());
        c.children.push_back(name_node("column_name"));
      }
      c.children.push_back(expect_symbol(")"));
    }
    return c;
  }

  AstNode from_clause() {
    AstNode from = node("from_clause");
    from.children.push_back(take());  // FROM
    AstNode first = table_or_subquery();
    if (!at_join_operator()) {
      from.children.push_back(std::move(first));
      while (peek_symbol(",")) {
        from.children.push_back(take());
        from.children.push_back(table_or_subquery());
      }
      if (!at_join_operator()) return from;
      // A comma list followed by JOIN: re-shape everything into a join clause.
      AstNode join = node("join_clause");
      for (std::size_t i = 1; i < from.children.size(); ++i) {
        auto& child = from.children[i];
        if (child.is_leaf()) {
          AstNode op = node("join_operator");
          op.children.push_back(std::move(child));
          join.children.push_back(std::move(op));
        } else {
          join.children.push_back(std::move(child));
        }
      }
      from.children.resize(1);
      join_tail(join);
      from.children.push_back(std::move(join));
      return from;
    }
    AstNode join = node("join_clause");
    join.children.push_back(std::move(first));
    join_tail(join);
    from.children.push_back(std::move(join));
    return from;
  }

  void join_tail(AstNode& join) {
    while (at_join_operator() || peek_symbol(",")) {
      join.children.push_back(join_operator());
      join.children.push_back(table_or_subquery());
      if (peek_kw("ON") || peek_kw("USING")) join.children.push_back(join_constraint());
    }
  }

  AstNode group_by_clause() {
    AstNode g = node("group_by_clause");
    g.children.push_back(take());
    g.children.push_back(expr());
    while (peek_symbol(",")) {
      g.children.push_back(take());
      g.children.push_back(expr());
    }
    if (peek_kw("HAVING")) {
      g.children.push_back(take());
      g.children.push_back(expr());
    }
    return g;
  }

  AstNode order_by_clause() {
    AstNode o = node("order_by_clause");
    o.children.push_back(take());
    o.children.push_back(ordering_term());
    while (peek_symbol(",")) {
      o.children.push_back(take());
      o.children.push_back(ordering_term());
    }
    return o;
  }

  AstNode ordering_term() {
    AstNode t = node("ordering_term");
    t.children.push_back(expr());
    if (peek_kw("ASC") || peek_kw("DESC")) t.children.push_back(take());
    return t;
  }

  AstNode limit_clause() {
    AstNode l = node("limit_clause");
    l.children.push_back(take());
    l.children.push_back(expr());
    if (peek_kw("OFFSET") || peek_symbol(",")) {
      l.children.push_back(take());
      l.children.push_back(expr());
    }
    return l;
  }

  // --- expressions --------------------------------------------------------

  static AstNode binary(AstNode lhs, std::vector<AstNode> ops, AstNode rhs) {
    AstNode e = node("expr");
    e.children.push_back(std::move(lhs));
    for (auto& op : ops) e.children.push_back(std::move(op));
    e.children.push_back(std::move(rhs));
    return e;
  }

  AstNode expr() { return or_expr(); }

  AstNode or_expr() {
    AstNode lhs = and_expr();
    while (peek_kw("OR")) {
      std::vector<AstNode> ops;
      ops.push_back(take());
      lhs = binary(std::move(lhs), std::move(ops), and_expr());
    }
    return lhs;
  }

  AstNode and_expr() {
    AstNode lhs = not_expr();
    while (peek_kw("AND")) {
      std::vector<AstNode> ops;
      ops.push_back(take());
      lhs = binary(std::move(lhs), std::move(ops), not_expr());
    }
    return lhs;
  }

  AstNode not_expr() {
    if (peek_kw("NOT") && !peek_kw("EXISTS", 1)) {
      AstNode e = node("expr");
      e.children.push_back(take());
      e.children.push_back(not_expr());
      return e;
    }
    return equality_expr();
  }

  AstNode equality_expr() {
    AstNode lhs = relational_expr();
    while (true) {
      if (peek_symbol("=") || peek_symbol("==") || peek_symbol("!=") || peek_symbol("<>")) {
        std::vector<AstNode> ops;
        ops.push_back(take());
        lhs = binary(std::move(lhs), std::move(ops), relational_expr());
        continue;
      }
      if (peek_kw("IS")) {
        std::vector<AstNode> ops;
        ops.push_back(take());
        if (peek_kw("NOT")) ops.push_back(take());
        lhs = binary(std::move(lhs), std::move(ops), relational_expr());
        continue;
      }
      const bool negated = peek_kw("NOT");
      const std::size_t k = negated ? 1 : 0;
      if (peek_kw("IN", k)) {
        AstNode e = node("expr");
        e.children.push_back(std::move(lhs));
        if (negated) e.children.push_back(take());
        e.children.push_back(take());
        e.children.push_back(expect_symbol("("));
        if (peek_kw("SELECT")) {
          e.children.push_back(select_stmt());
        } else if (!peek_symbol(")")) {
          e.children.push_back(expr());
          while (peek_symbol(",")) {
            e.children.push_back(take());
            e.children.push_back(expr());
          }
        }
        e.children.push_back(expect_symbol(")"));
        lhs = std::move(e);
        continue;
      }
      if (peek_kw("LIKE", k) || peek_kw("GLOB", k)) {
        std::vector<AstNode> ops;
        if (negated) ops.push_back(take());
        ops.push_back(take());
        AstNode e = binary(std::move(lhs), std::move(ops), relational_expr());
        if (peek_kw("ESCAPE")) {
          e.children.push_back(take());
          e.children.push_back(relational_expr());
        }
        lhs = std::move(e);
        continue;
      }
      if (peek_kw("BETWEEN", k)) {
        AstNode e = node("expr");
        e.children.push_back(std::move(lhs));
        if (negated) e.children.push_back(take());
        e.children.push_back(take());
        e.children.push_back(relational_expr());
        e.children.push_back(expect_kw("AND"));
        e.children.push_back(relational_expr());
        lhs = std::move(e);
        continue;
      }
      return lhs;
    }
  }

  AstNode relational_expr() {
    AstNode lhs = bitwise_expr();
    while (peek_symbol("<") || peek_symbol("<=") || peek_symbol(">") || peek_symbol(">=")) {
      std::vector<AstNode> ops;
      ops.push_back(take());
      lhs = binary(std::move(lhs), std::move(ops), bitwise_expr());
    }
    return lhs;
  }

  AstNode bitwise_expr() {
    AstNode lhs = additive_expr();
    while (peek_symbol("&") || peek_symbol("|") || peek_symbol("<<") || peek_symbol(">>")) {
      std::vector<AstNode> ops;
      ops.push_back(take());
      lhs = binary(std::move(lhs), std::move(ops), additive_expr());
    }
    return lhs;
  }

  AstNode additive_expr() {
    AstNode lhs = multiplicative_expr();
    while (peek_symbol("+") || peek_symbol("-")) {
      std::vector<AstNode> ops;
      ops.push_back(take());
      lhs = binary(std::move(lhs), std::move(ops), multiplicative_expr());
    }
    return lhs;
  }

  AstNode multiplicative_expr() {
    AstNode lhs = concat_expr();
    while (peek_symbol("*") || peek_symbol("/") || peek_symbol("%")) {
      std::vector<AstNode> ops;
      ops.push_back(take());
      lhs = binary(std::move(lhs), std::move(ops), concat_expr());
    }
    return lhs;
  }

  AstNode concat_expr() {
    AstNode lhs = unary_expr();
    while (peek_symbol("||")) {
      std::vector<AstNode> ops;
      ops.push_back(take());
      lhs = binary(std::move(lhs), std::move(ops), unary_expr());
    }
    return lhs;
  }

  AstNode unary_expr() {
    if (peek_symbol("-") || peek_symbol("+") || peek_symbol("~")) {
      AstNode e = node("expr");
      e.children.push_back(take());
      e.children.push_back(unary_expr());
      return e;
    }
    return primary();
  }

  AstNode primary() {
    if (at_end()) fail("expression");
    AstNode e = node("expr");
    const SqlToken& t = *cur();

    if (t.kind == TokenKind::kNumber || t.kind == TokenKind::kString || t.is("NULL")) {
      AstNode lit = node("literal_value");
      lit.children.push_back(take());
      e.children.push_back(std::move(lit));
      return e;
    }
    if (t.is_symbol("(")) {
      e.children.push_back(take());
      if (peek_kw("SELECT")) {
        e.children.push_back(select_stmt());
      } else {
        e.children.push_back(expr());
      }
      e.children.push_back(expect_symbol(")"));
      return e;
    }
    if (t.is("EXISTS") || (t.is("NOT") && peek_kw("EXISTS", 1))) {
      if (t.is("NOT")) e.children.push_back(take());
      e.children.push_back(take());
      e.children.push_back(expect_symbol("("));
      e.children.push_back(select_stmt());
      e.children.push_back(expect_symbol(")"));
      return e;
    }
    if (t.is("CASE")) {
      e.children.push_back(take());
      if (!peek_kw("WHEN")) e.children.push_back(expr());
      if (!peek_kw("WHEN")) fail("WHEN");
      while (peek_kw("WHEN")) {
        e.children.push_back(take());
        e.children.push_back(expr());
        e.children.push_back(expect_kw("THEN"));
        e.children.push_back(expr());
      }
      if (peek_kw("ELSE")) {
        e.children.push_back(take());
        e.children.push_back(expr());
      }
      e.children.push_back(expect_kw("END"));
      return e;
    }
    if (t.is("CAST")) {
      e.children.push_back(take());
      e.children.push_back(expect_symbol("("));
      e.children.push_back(expr());
      e.children.push_back(expect_kw("AS"));
      AstNode type = node("type_name");
      if (!peek_kind(TokenKind::kIdentifier)) fail("type name");
      while (peek_kind(TokenKind::kIdentifier)) type.children.push_back(take());
      e.children.push_back(std::move(type));
      e.children.push_back(expect_symbol(")"));
      return e;
    }
    if (t.kind == TokenKind::kIdentifier) {
      if (peek_symbol("(", 1)) return function_call();
      if (peek_symbol(".", 1)) {
        e.children.push_back(name_node("table_name"));
        e.children.push_back(take());
        e.children.push_back(name_node("column_name"));
        return e;
      }
      e.children.push_back(name_node("column_name"));
      return e;
    }
    fail("expression");
  }

  AstNode function_call() {
    AstNode e = node("expr");
    e.children.push_back(name_node("function_name"));
    e.children.push_back(take());  // (
    if (peek_symbol("*")) {
      e.children.push_back(take());
    } else if (!peek_symbol(")")) {
      if (peek_kw("DISTINCT")) e.children.push_back(take());
      e.children.push_back(expr());
      while (peek_symbol(",")) {
        e.children.push_back(take());
        e.children.push_back(expr());
      }
    }
    e.children.push_back(expect_symbol(")"));
    return e;
  }
};

void collect_leaves(const AstNode& n, std::vector<int>& out) {
  if (n.is_leaf()) {
    out.push_back(n.token);
    return;
  }
  for (const auto& c : n.children) collect_leaves(c, out);
}

void sexpr(const SqlAst& ast, const AstNode& n, std::ostream& out) {
  if (n.is_leaf()) {
    out << ast.tokens[n.token].text;
    return;
  }
  out << '(' << n.label;
  for (const auto& c : n.children) {
    out << ' ';
    sexpr(ast, c, out);
  }
  out << ')';
}

bool nodes_equal(const SqlAst& a, const AstNode& x, const SqlAst& b, const AstNode& y) {
  if (x.is_leaf() != y.is_leaf()) return false;
  if (x.is_leaf()) {
    const auto& s = a.tokens[x.token];
    const auto& t = b.tokens[y.token];
    return s.kind == t.kind && s.text == t.text;
  }
  if (x.label != y.label || x.children.size() != y.children.size()) return false;
  for (std::size_t i = 0; i < x.children.size(); ++i) {
    if (!nodes_equal(a, x.children[i], b, y.children[i])) return false;
  }
  return true;
}

}  // namespace

SqlAst parse(std::vector<SqlToken> tokens) {
  SqlAst ast;
  ast.tokens = std::move(tokens);
  Parser p(ast.tokens);
  ast.root = p.parse_statement();
  return ast;
}

SqlAst parse_sql(std::string_view sql) { return parse(tokenize(sql)); }

std::vector<int> leaf_tokens(const AstNode& node) {
  std::vector<int> out;
  collect_leaves(node, out);
  return out;
}

std::string render(const SqlAst& ast, const AstNode& node) {
  std::string out;
  for (int t : leaf_tokens(node)) {
    if (!out.empty()) out.push_back(' ');
    out += ast.tokens[t].text;
  }
  return out;
}

std::string render(const SqlAst& ast) { return render(ast, ast.root); }

std::string to_sexpr(const SqlAst& ast) {
  std::ostringstream out;
  sexpr(ast, ast.root, out);
  return out.str();
}

bool ast_equal(const SqlAst& a, const SqlAst& b) { return nodes_equal(a, a.root, b, b.root); }

const AstNode* find_child(const AstNode& node, std::string_view label) {
  for (const auto& c : node.children) {
    if (!c.is_leaf() && c.label == label) return &c;
  }
  return nullptr;
}

}  // namespace sqled
