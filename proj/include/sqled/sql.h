#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace sqled {

enum class TokenKind { kKeyword, kIdentifier, kNumber, kString, kOperator, kPunctuation };

std::string_view token_kind_name(TokenKind k);

struct SqlToken {
  std::string text;  // verbatim source slice
  TokenKind kind = TokenKind::kIdentifier;
  std::size_t begin = 0;
  std::size_t end = 0;

  // Keywords: upper case, single spaced ("GROUP BY"). Identifiers: lower case
  // with quoting removed. Strings: single-quoted with the original value.
  std::string canonical() const;
  // Keyword check against the canonical spelling.
  bool is(std::string_view keyword) const;
  // Operator/punctuation check against the verbatim text.
  bool is_symbol(std::string_view symbol) const;
};

// GROUP BY and ORDER BY each lex to one keyword token.
std::vector<SqlToken> tokenize(std::string_view sql);

// Parse tree node. Internal nodes carry a grammar non-terminal; leaves
// reference a token by index.
struct AstNode {
  std::string label;
  int token = -1;
  std::vector<AstNode> children;

  bool is_leaf() const { return token >= 0; }
};

struct SqlAst {
  std::vector<SqlToken> tokens;
  AstNode root;  // label "select_stmt"
};

// Grammar (modified SQLite, Spider subset):
//   select_stmt   : (select_core | compound_select) order_by_clause? limit_clause? ';'?
//   compound_select : select_core compound_operator select_core   (left nested)
//   select_core   : SELECT (DISTINCT|ALL)? result_clause from_clause? where_clause? group_by_clause?
//   result_clause : result_column (',' result_column)*
//   from_clause   : FROM table_or_subquery (',' table_or_subquery)* | FROM join_clause
//   where_clause  : WHERE expr
//   group_by_clause : GROUP_BY expr (',' expr)* (HAVING expr)?
//   order_by_clause : ORDER_BY ordering_term (',' ordering_term)*
//   limit_clause  : LIMIT expr ((OFFSET | ',') expr)?
SqlAst parse(std::vector<SqlToken> tokens);
SqlAst parse_sql(std::string_view sql);

// Leaves of the tree in order, as token indices.
std::vector<int> leaf_tokens(const AstNode& node);

// Joins the leaf token texts with single spaces.
std::string render(const SqlAst& ast);
std::string render(const SqlAst& ast, const AstNode& node);

// S-expression debug dump, e.g. (select_stmt (select_core SELECT ...)).
std::string to_sexpr(const SqlAst& ast);

// Structural equality: labels, shape, and token kind/text at the leaves.
bool ast_equal(const SqlAst& a, const SqlAst& b);

// Direct children of the root with the given label (nullptr when absent).
const AstNode* find_child(const AstNode& node, std::string_view label);

}  // namespace sqled
