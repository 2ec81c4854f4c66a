#include "sqled/sql_rewrite.h"

#include <algorithm>
#include <cctype>
#include <map>

#include "sqled/error.h"

namespace sqled {

namespace {

void build_graph(const SqlAst& ast, const AstNode& n, int parent, bool prune, Graph& g) {
  if (prune && !n.is_leaf() && n.label == "join_constraint") return;
  const int id = n.is_leaf() ? g.add_leaf(n.token) : g.add_internal(n.label);
  if (parent >= 0) g.add_edge(parent, id, EdgeType::kChild);
  for (const auto& c : n.children) build_graph(ast, c, id, prune, g);
}

SqlAst without_root_child(const SqlAst& ast, std::string_view label) {
  SqlAst copy = ast;
  auto& kids = copy.root.children;
  kids.erase(std::remove_if(kids.begin(), kids.end(),
                            [&](const AstNode& c) { return !c.is_leaf() && c.label == label; }),
             kids.end());
  // Re-lex so the token list again matches the leaves one to one.
  return parse_sql(render(copy));
}

std::string canonical_tokens(const SqlAst& ast, const AstNode& n) {
  std::string out;
  for (int t : leaf_tokens(n)) {
    if (!out.empty()) out.push_back(' ');
    out += ast.tokens[t].canonical();
  }
  return out;
}

// Alias scopes for set-match normalization. Each select_core pushes the
// aliases declared in its own FROM clause.
class Canonicalizer {
 public:
  explicit Canonicalizer(const SqlAst& ast) : ast_(ast) {}

  std::string run() { return canon(ast_.root); }

 private:
  const SqlAst& ast_;
  std::vector<std::map<std::string, std::string>> scopes_;

  std::string tok(int index) const { return ast_.tokens[index].canonical(); }

  std::string resolve_table(const std::string& name) const {
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
      auto found = it->find(name);
      if (found != it->end()) return found->second;
    }
    return name;
  }

  void collect_aliases(const AstNode& n, std::map<std::string, std::string>& scope) const {
    if (n.is_leaf()) return;
    if (n.label == "table_or_subquery") {
      const AstNode* table = find_child(n, "table_name");
      const AstNode* alias = find_child(n, "table_alias");
      if (alias) {
        const std::string alias_name = tok(alias->children[0].token);
        scope[alias_name] = table ? tok(table->children[0].token) : alias_name;
      }
      return;  // do not descend into subqueries
    }
    for (const auto& c : n.children) collect_aliases(c, scope);
  }

  static void flatten_and(const SqlAst& ast, const AstNode& e, std::vector<const AstNode*>& out) {
    if (!e.is_leaf() && e.label == "expr" && e.children.size() == 3 && e.children[1].is_leaf() &&
        ast.tokens[e.children[1].token].is("AND")) {
      flatten_and(ast, e.children[0], out);
      flatten_and(ast, e.children[2], out);
      return;
    }
    out.push_back(&e);
  }

  std::string sorted_list(std::vector<std::string> items, const std::string& tag) const {
    std::sort(items.begin(), items.end());
    std::string out = "(" + tag;
    for (auto& s : items) out += " " + s;
    return out + ")";
  }

  std::string canon(const AstNode& n) {
    if (n.is_leaf()) return tok(n.token);
    if (n.label == "select_core") {
      std::map<std::string, std::string> scope;
      if (const AstNode* from = find_child(n, "from_clause")) collect_aliases(*from, scope);
      scopes_.push_back(std::move(scope));
      std::string out = generic(n);
      scopes_.pop_back();
      return out;
    }
    if (n.label == "result_clause") {
      std::vector<std::string> cols;
      for (const auto& c : n.children) {
        if (!c.is_leaf()) cols.push_back(canon(c));
      }
      return sorted_list(std::move(cols), "result_clause");
    }
    if (n.label == "where_clause") {
      std::vector<const AstNode*> conj;
      flatten_and(ast_, n.children[1], conj);
      std::vector<std::string> items;
      for (const auto* c : conj) items.push_back(canon(*c));
      return sorted_list(std::move(items), "where_clause");
    }
    if (n.label == "group_by_clause") {
      std::vector<std::string> keys;
      std::string having;
      for (std::size_t i = 1; i < n.children.size(); ++i) {
        const auto& c = n.children[i];
        if (c.is_leaf() && ast_.tokens[c.token].is("HAVING")) {
          having = " (having " + canon(n.children[i + 1]) + ")";
          break;
        }
        if (!c.is_leaf()) keys.push_back(canon(c));
      }
      std::string out = sorted_list(std::move(keys), "group_by_clause");
      out.pop_back();
      return out + having + ")";
    }
    if (n.label == "table_or_subquery") {
      // The alias is inlined at use sites, so it is dropped here.
      std::string out = "(table_or_subquery";
      for (const auto& c : n.children) {
        if (c.is_leaf() && ast_.tokens[c.token].is("AS")) continue;
        if (!c.is_leaf() && c.label == "table_alias") continue;
        out += " " + canon(c);
      }
      return out + ")";
    }
    if (n.label == "expr" && n.children.size() == 3 && !n.children[0].is_leaf() &&
        n.children[0].label == "table_name" && n.children[1].is_leaf() &&
        ast_.tokens[n.children[1].token].is_symbol(".")) {
      return "(column " + resolve_table(tok(n.children[0].children[0].token)) + "." +
             tok(n.children[2].children[0].token) + ")";
    }
    if (n.label == "expr" && n.children.size() == 1 && !n.children[0].is_leaf() &&
        n.children[0].label == "column_name") {
      return "(column " + tok(n.children[0].children[0].token) + ")";
    }
    return generic(n);
  }

  std::string generic(const AstNode& n) {
    std::string out = "(" + n.label;
    for (const auto& c : n.children) out += " " + canon(c);
    return out + ")";
  }
};

}  // namespace

Graph ast_to_graph(const SqlAst& ast, const SqlGraphOptions& options) {
  Graph g;
  build_graph(ast, ast.root, -1, options.prune_joins, g);
  if (options.simplify) g = simplify_tree(g);
  return add_sequential_edges(g);
}

std::vector<std::string> leaf_vocabulary_tokens(const SqlAst& ast) {
  std::vector<std::string> out;
  out.reserve(ast.tokens.size());
  for (const auto& t : ast.tokens) {
    std::string c = t.canonical();
    std::transform(c.begin(), c.end(), c.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    out.push_back(std::move(c));
  }
  return out;
}

bool has_top_level_order_by(const SqlAst& ast) {
  return find_child(ast.root, "order_by_clause") != nullptr;
}

bool has_top_level_limit(const SqlAst& ast) {
  return find_child(ast.root, "limit_clause") != nullptr;
}

std::pair<SqlAst, SqlAst> drop_equal_limits(const SqlAst& gold, const SqlAst& pred) {
  const AstNode* gl = find_child(gold.root, "limit_clause");
  const AstNode* pl = find_child(pred.root, "limit_clause");
  if (!gl || !pl || canonical_tokens(gold, *gl) != canonical_tokens(pred, *pl)) {
    return {gold, pred};
  }
  return {without_root_child(gold, "limit_clause"), without_root_child(pred, "limit_clause")};
}

std::string normalize_for_set_match(const SqlAst& ast) { return Canonicalizer(ast).run(); }

bool set_match(const SqlAst& a, const SqlAst& b) {
  return normalize_for_set_match(a) == normalize_for_set_match(b);
}

std::string normalized_sql_key(const std::string& sql) {
  try {
    const auto tokens = tokenize(sql);
    std::string out;
    for (const auto& t : tokens) {
      if (!out.empty()) out.push_back(' ');
      out += t.canonical();
    }
    return out;
  } catch (const LexError&) {
    std::string out;
    bool space = false;
    for (unsigned char c : sql) {
      if (std::isspace(c)) {
        space = !out.empty();
        continue;
      }
      if (space) out.push_back(' ');
      space = false;
      out.push_back(static_cast<char>(std::tolower(c)));
    }
    return out;
  }
}

}  // namespace sqled
