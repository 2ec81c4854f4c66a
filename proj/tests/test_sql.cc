#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "sqled/error.h"
#include "sqled/sql.h"
#include "sqled/sql_rewrite.h"
#include "support/graph_oracles.h"
#include "support/sql_gen.h"
#include "support/reference_queries.h"

namespace sqled {
namespace {

std::vector<std::string> texts(const std::vector<SqlToken>& toks) {
  std::vector<std::string> out;
  for (const auto& t : toks) out.push_back(t.text);
  return out;
}

bool has_node(const AstNode& n, std::string_view label) {
  if (!n.is_leaf() && n.label == label) return true;
  for (const auto& c : n.children)
    if (has_node(c, label)) return true;
  return false;
}

TEST(Lexer, SelectOne) {
  const auto toks = tokenize("SELECT 1");
  ASSERT_EQ(toks.size(), 2u);
  EXPECT_EQ(toks[0].kind, TokenKind::kKeyword);
  EXPECT_EQ(toks[1].kind, TokenKind::kNumber);
}

TEST(Lexer, GroupByAndOrderByAreSingleTokens) {
  const auto toks = tokenize("GROUP BY x");
  ASSERT_EQ(toks.size(), 2u);
  EXPECT_EQ(toks[0].canonical(), "GROUP BY");
  EXPECT_TRUE(toks[0].is("GROUP BY"));
  EXPECT_EQ(toks[1].kind, TokenKind::kIdentifier);

  const auto spaced = tokenize("order\n\t by y DESC");
  ASSERT_EQ(spaced.size(), 3u);
  EXPECT_EQ(spaced[0].canonical(), "ORDER BY");
  EXPECT_EQ(spaced[0].text, "order\n\t by");
}

TEST(Lexer, ThirteenTokenExample) {
  const std::string sql = "SELECT COUNT(*) FROM head WHERE head.age > 56";
  const auto toks = tokenize(sql);
  EXPECT_EQ(toks.size(), 13u);
  EXPECT_EQ(texts(tokenize(render(parse(toks)))), texts(toks));
}

TEST(Lexer, QuotingAndSpans) {
  const auto toks = tokenize("SELECT `Full Name`, [x y], 'it''s', \"dq\" FROM t");
  ASSERT_EQ(toks.size(), 10u);
  EXPECT_EQ(toks[1].kind, TokenKind::kIdentifier);
  EXPECT_EQ(toks[1].canonical(), "full name");
  EXPECT_EQ(toks[3].canonical(), "x y");
  EXPECT_EQ(toks[5].kind, TokenKind::kString);
  EXPECT_EQ(toks[5].text, "'it''s'");
  EXPECT_EQ(toks[7].kind, TokenKind::kString);
  for (std::size_t i = 1; i < toks.size(); ++i) EXPECT_LE(toks[i - 1].end, toks[i].begin);
}

TEST(Lexer, Errors) {
  EXPECT_THROW(tokenize("SELECT 'open"), LexError);
  EXPECT_THROW(tokenize("SELECT a FROM t WHERE b = $1"), LexError);
  try {
    tokenize("SELECT #");
    FAIL();
  } catch (const LexError& e) {
    EXPECT_EQ(e.position(), 7u);
  }
}

TEST(Lexer, RetokenizeIsIdentityOnGeneratedQueries) {
  testing::SqlGenerator gen(17);
  for (int i = 0; i < 100; ++i) {
    const std::string sql = gen.statement();
    const auto toks = tokenize(sql);
    std::string joined;
    for (const auto& t : toks) joined += t.text + " ";
    EXPECT_EQ(texts(tokenize(joined)), texts(toks)) << sql;
  }
}

TEST(Parser, OptionalClausesAbsent) {
  const SqlAst ast = parse_sql("SELECT a FROM t");
  const AstNode* core = find_child(ast.root, "select_core");
  ASSERT_NE(core, nullptr);
  EXPECT_NE(find_child(*core, "result_clause"), nullptr);
  EXPECT_NE(find_child(*core, "from_clause"), nullptr);
  EXPECT_EQ(find_child(*core, "where_clause"), nullptr);
  EXPECT_EQ(find_child(*core, "group_by_clause"), nullptr);
}

TEST(Parser, OrderByAndLimitConstructs) {
  const SqlAst ast = parse_sql(reference_queries::kFestivalGold);
  EXPECT_NE(find_child(ast.root, "select_core"), nullptr);
  EXPECT_NE(find_child(ast.root, "order_by_clause"), nullptr);
  EXPECT_NE(find_child(ast.root, "limit_clause"), nullptr);
  EXPECT_TRUE(has_top_level_order_by(ast));
}

TEST(Parser, EveryTokenIsOneLeaf) {
  testing::SqlGenerator gen(23);
  for (int i = 0; i < 100; ++i) {
    const SqlAst ast = parse_sql(gen.statement());
    std::vector<int> leaves = leaf_tokens(ast.root);
    std::vector<int> want(ast.tokens.size());
    std::iota(want.begin(), want.end(), 0);
    EXPECT_EQ(leaves, want);
  }
}

TEST(Parser, ClauseOrderIsEnforced) {
  EXPECT_THROW(parse_sql("SELECT a WHERE b = 1 FROM t"), SyntaxError);
  EXPECT_THROW(parse_sql("SELECT a FROM t GROUP BY a WHERE b = 1"), SyntaxError);
  EXPECT_THROW(parse_sql("SELECT a FROM t LIMIT 1 ORDER BY a"), SyntaxError);
  EXPECT_THROW(parse_sql("SELECT FROM t"), SyntaxError);
  EXPECT_THROW(parse_sql("SELECT a FROM t extra tokens"), SyntaxError);
  EXPECT_THROW(parse_sql("INSERT INTO t VALUES (1)"), SyntaxError);
}

TEST(Parser, SetOperationsAreBinary) {
  const SqlAst ast = parse_sql("SELECT a FROM t UNION SELECT a FROM u EXCEPT SELECT a FROM v");
  const AstNode* outer = find_child(ast.root, "compound_select");
  ASSERT_NE(outer, nullptr);
  EXPECT_EQ(outer->children.size(), 3u);
  EXPECT_EQ(outer->children[0].label, "compound_select");
  EXPECT_EQ(outer->children[2].label, "select_core");
}

TEST(Parser, ReferenceQueriesRoundTrip) {
  for (const auto& sql : reference_queries::kValid) {
    const SqlAst a = parse_sql(sql);
    const SqlAst b = parse_sql(render(a));
    EXPECT_TRUE(ast_equal(a, b)) << sql;
  }
}

TEST(Parser, ParenthesizedDistinctIsRejected) {
  EXPECT_THROW(parse_sql(reference_queries::kMalformed), SyntaxError);
}

TEST(Parser, GeneratedQueriesRoundTrip) {
  testing::SqlGenerator gen(42);
  for (int i = 0; i < 200; ++i) {
    const std::string sql = gen.statement();
    SqlAst a;
    ASSERT_NO_THROW(a = parse_sql(sql)) << sql;
    const SqlAst b = parse_sql(render(a));
    EXPECT_TRUE(ast_equal(a, b)) << sql;
    EXPECT_EQ(to_sexpr(a), to_sexpr(b));
  }
}

TEST(Parser, SexprGolden) {
  EXPECT_EQ(to_sexpr(parse_sql("SELECT a FROM t")),
            "(select_stmt (select_core SELECT (result_clause (result_column (expr (column_name "
            "a)))) (from_clause FROM (table_or_subquery (table_name t)))))");
}

TEST(SqlGraph, SelectOneHasNoUnaryInternals) {
  const Graph g = ast_to_graph(parse_sql("SELECT 1"));
  EXPECT_GE(g.leaf_count(), 2u);
  EXPECT_EQ(testing::unary_internal_count(g), 0u);
  EXPECT_EQ(g.count_edges(EdgeType::kSequential), g.leaf_count() - 1);
}

TEST(SqlGraph, JoinConstraintsPruned) {
  const SqlAst ast = parse_sql(reference_queries::kJoinQuery);
  ASSERT_TRUE(has_node(ast.root, "join_constraint"));
  const Graph pruned = ast_to_graph(ast, {true, true});
  const Graph full = ast_to_graph(ast, {false, true});

  // Token-span oracle: tokens from ON to the next JOIN/WHERE/GROUP BY are
  // inside a constraint.
  std::size_t inside = 0;
  bool in_on = false;
  for (const auto& t : ast.tokens) {
    if (t.is("ON")) in_on = true;
    if (t.is("JOIN") || t.is("WHERE") || t.is("GROUP BY")) in_on = false;
    if (in_on) ++inside;
  }
  EXPECT_EQ(inside, 16u);
  EXPECT_EQ(pruned.leaf_count(), ast.tokens.size() - inside);
  EXPECT_EQ(full.leaf_count(), ast.tokens.size());
  for (const auto& n : pruned.nodes()) {
    if (n.is_leaf()) {
      EXPECT_FALSE(ast.tokens[n.token_position].is("ON"));
    }
    EXPECT_NE(n.label, "join_constraint");
  }
}

TEST(SqlGraph, LeafOrderFollowsTokens) {
  testing::SqlGenerator gen(99);
  for (int i = 0; i < 50; ++i) {
    const SqlAst ast = parse_sql(gen.statement());
    const Graph g = ast_to_graph(ast, {false, true});
    std::vector<int> positions;
    for (int id : g.leaf_order()) positions.push_back(g.nodes()[id].token_position);
    std::vector<int> want(ast.tokens.size());
    std::iota(want.begin(), want.end(), 0);
    EXPECT_EQ(positions, want);
    const Graph raw = ast_to_graph(ast, {false, false});
    EXPECT_EQ(raw.leaf_count(), g.leaf_count());
    EXPECT_GE(raw.size(), g.size());
  }
}

TEST(DropLimits, EqualArgumentsRemoved) {
  const auto [g, p] = drop_equal_limits(parse_sql("SELECT a FROM t ORDER BY a LIMIT 3"),
                                        parse_sql("SELECT b FROM t LIMIT 3"));
  EXPECT_FALSE(has_top_level_limit(g));
  EXPECT_FALSE(has_top_level_limit(p));
  EXPECT_EQ(render(g), "SELECT a FROM t ORDER BY a");
  EXPECT_EQ(render(p), "SELECT b FROM t");
}

TEST(DropLimits, UnequalOrOneSidedUnchanged) {
  const SqlAst a = parse_sql("SELECT a FROM t LIMIT 3");
  const SqlAst b = parse_sql("SELECT a FROM t LIMIT 1");
  const SqlAst c = parse_sql("SELECT a FROM t");
  auto [a1, b1] = drop_equal_limits(a, b);
  EXPECT_TRUE(ast_equal(a1, a));
  EXPECT_TRUE(ast_equal(b1, b));
  auto [c2, a2] = drop_equal_limits(c, a);
  EXPECT_TRUE(ast_equal(c2, c));
  EXPECT_TRUE(ast_equal(a2, a));
  auto [x, y] = drop_equal_limits(parse_sql("SELECT a FROM t LIMIT 1+2"), a);
  EXPECT_TRUE(has_top_level_limit(x));
  EXPECT_TRUE(has_top_level_limit(y));
}

TEST(DropLimits, SubqueryLimitIgnored) {
  const SqlAst a = parse_sql("SELECT a FROM t WHERE b IN (SELECT b FROM u LIMIT 2)");
  EXPECT_FALSE(has_top_level_limit(a));
  auto [x, y] = drop_equal_limits(a, a);
  EXPECT_EQ(render(x), render(a));
}

TEST(OrderBy, TopLevelOnly) {
  EXPECT_TRUE(has_top_level_order_by(parse_sql("SELECT a FROM t ORDER BY a")));
  EXPECT_FALSE(has_top_level_order_by(
      parse_sql("SELECT a FROM t WHERE b IN (SELECT b FROM u ORDER BY b)")));
}

TEST(SetMatch, CommutativeCollections) {
  EXPECT_TRUE(set_match(parse_sql("SELECT a, b FROM t"), parse_sql("select b , a from t")));
  EXPECT_TRUE(set_match(parse_sql("SELECT a FROM t WHERE x>1 AND y<2"),
                        parse_sql("SELECT a FROM t WHERE y<2 AND x>1")));
  EXPECT_TRUE(set_match(parse_sql("SELECT T1.a FROM t AS T1 GROUP BY T1.b, T1.c"),
                        parse_sql("SELECT t.a FROM t GROUP BY t.c, t.b")));
  EXPECT_FALSE(set_match(parse_sql("SELECT a FROM t WHERE x>1"),
                         parse_sql("SELECT a FROM t WHERE x<1")));
  EXPECT_FALSE(set_match(parse_sql("SELECT a FROM t WHERE x>1 OR y<2"),
                         parse_sql("SELECT a FROM t WHERE x>1 AND y<2")));
  EXPECT_FALSE(set_match(parse_sql("SELECT a FROM t WHERE 'A' = x"),
                         parse_sql("SELECT a FROM t WHERE 'a' = x")));
}

// Brute-force oracle: B set-matches A iff some permutation of B's column,
// conjunct and group-key lists yields A's lists exactly.
struct QueryParts {
  std::vector<std::string> cols, conds, keys;
  std::string sql() const {
    std::string s = "SELECT ";
    for (std::size_t i = 0; i < cols.size(); ++i) s += (i ? ", " : "") + cols[i];
    s += " FROM t";
    for (std::size_t i = 0; i < conds.size(); ++i) s += (i ? " AND " : " WHERE ") + conds[i];
    for (std::size_t i = 0; i < keys.size(); ++i) s += (i ? ", " : " GROUP BY ") + keys[i];
    return s;
  }
};

bool some_permutation_equal(std::vector<std::string> b, const std::vector<std::string>& a) {
  std::sort(b.begin(), b.end());
  do {
    if (b == a) return true;
  } while (std::next_permutation(b.begin(), b.end()));
  return false;
}

TEST(SetMatch, AgreesWithPermutationOracle) {
  std::mt19937_64 rng(8);
  const std::vector<std::string> cols = {"a", "b", "c", "max(d)", "count(*)"};
  const std::vector<std::string> conds = {"x > 1", "y < 2", "z = 'q'", "w != 3"};
  const std::vector<std::string> keys = {"a", "b", "e"};
  auto sample = [&](const std::vector<std::string>& pool, std::size_t lo) {
    std::vector<std::string> v = pool;
    std::shuffle(v.begin(), v.end(), rng);
    v.resize(lo + rng() % (pool.size() - lo + 1));
    return v;
  };
  int matches = 0;
  for (int trial = 0; trial < 60; ++trial) {
    QueryParts a{sample(cols, 1), sample(conds, 0), sample(keys, 0)};
    QueryParts b = a;
    std::shuffle(b.cols.begin(), b.cols.end(), rng);
    std::shuffle(b.conds.begin(), b.conds.end(), rng);
    std::shuffle(b.keys.begin(), b.keys.end(), rng);
    if (trial % 2 == 1) {
      switch (rng() % 3) {
        case 0:
          b.cols = sample(cols, 1);
          break;
        case 1:
          b.conds = sample(conds, 0);
          break;
        default:
          b.keys = sample(keys, 0);
      }
    }
    const bool oracle = some_permutation_equal(b.cols, a.cols) &&
                        some_permutation_equal(b.conds, a.conds) &&
                        some_permutation_equal(b.keys, a.keys);
    EXPECT_EQ(set_match(parse_sql(a.sql()), parse_sql(b.sql())), oracle)
        << a.sql() << " vs " << b.sql();
    matches += oracle ? 1 : 0;
  }
  EXPECT_GE(matches, 30);
  EXPECT_LT(matches, 60);
}

TEST(SqlKey, NormalizesCaseAndSpace) {
  EXPECT_EQ(normalized_sql_key("SELECT  a FROM T"), normalized_sql_key("select a\nfrom t"));
  EXPECT_NE(normalized_sql_key("SELECT a FROM t WHERE b = 'X'"),
            normalized_sql_key("SELECT a FROM t WHERE b = 'x'"));
  EXPECT_EQ(normalized_sql_key("SELECT 'open"), normalized_sql_key("select   'OPEN"));
}

}  // namespace
}  // namespace sqled
