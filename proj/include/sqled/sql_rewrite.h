#pragma once

#include <string>
#include <utility>
#include <vector>

#include "sqled/graph.h"
#include "sqled/sql.h"

namespace sqled {

struct SqlGraphOptions {
  bool prune_joins = true;
  bool simplify = true;
};

// Internal AST nodes become Internal graph nodes labeled by non-terminal,
// tokens become leaves keyed by token index. Join constraints (ON/USING) are
// dropped when pruning. Sequential edges are always added.
Graph ast_to_graph(const SqlAst& ast, const SqlGraphOptions& options = {});

// Canonical token strings indexed by token position, used as leaf vocabulary.
std::vector<std::string> leaf_vocabulary_tokens(const SqlAst& ast);

// When both outermost queries end in LIMIT clauses with the same rendered
// argument, returns both queries without them; otherwise returns the inputs.
std::pair<SqlAst, SqlAst> drop_equal_limits(const SqlAst& gold, const SqlAst& pred);

// True iff the outermost query (not a subquery) has an ORDER BY clause.
bool has_top_level_order_by(const SqlAst& ast);

bool has_top_level_limit(const SqlAst& ast);

// Canonical string for the simplified exact-set-match comparison: keywords
// and identifiers lower-cased, table aliases inlined, and result columns,
// top-level AND conjuncts, and GROUP BY expressions sorted.
std::string normalize_for_set_match(const SqlAst& ast);

bool set_match(const SqlAst& a, const SqlAst& b);

// Whitespace- and case-normalized token sequence used as a dedup key. Falls
// back to a collapsed lower-case string when the text does not lex.
std::string normalized_sql_key(const std::string& sql);

}  // namespace sqled
