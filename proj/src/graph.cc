#include "sqled/graph.h"

#include <algorithm>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "sqled/error.h"

namespace sqled {

std::string_view edge_type_name(EdgeType t) {
  switch (t) {
    case EdgeType::kChild:
      return "child";
    case EdgeType::kDependency:
      return "dependency";
    case EdgeType::kSequential:
      return "sequential";
    case EdgeType::kSelfLoop:
      return "self";
  }
  return "?";
}

EdgeType parse_edge_type(std::string_view name) {
  if (name == "child") return EdgeType::kChild;
  if (name == "dependency") return EdgeType::kDependency;
  if (name == "sequential") return EdgeType::kSequential;
  if (name == "self") return EdgeType::kSelfLoop;
  throw GraphError("unknown edge type '" + std::string(name) + "'");
}

int Graph::add_leaf(int token_position) {
  Node n;
  n.id = static_cast<int>(nodes_.size());
  n.kind = NodeKind::kLeaf;
  n.token_position = token_position;
  nodes_.push_back(std::move(n));
  return nodes_.back().id;
}

int Graph::add_internal(std::string label) {
  Node n;
  n.id = static_cast<int>(nodes_.size());
  n.kind = NodeKind::kInternal;
  n.label = std::move(label);
  nodes_.push_back(std::move(n));
  return nodes_.back().id;
}

bool Graph::add_edge(int src, int dst, EdgeType type) {
  const int n = static_cast<int>(nodes_.size());
  if (src < 0 || dst < 0 || src >= n || dst >= n) {
    throw GraphError("edge endpoint out of range");
  }
  if (src == dst) throw GraphError("self edges are not allowed in a Graph");
  if (has_edge(src, dst, type)) return false;
  edges_.push_back({src, dst, type});
  return true;
}

std::vector<int> Graph::leaf_order() const {
  std::vector<int> leaves;
  for (const auto& n : nodes_) {
    if (n.is_leaf()) leaves.push_back(n.id);
  }
  std::stable_sort(leaves.begin(), leaves.end(), [&](int a, int b) {
    return nodes_[a].token_position < nodes_[b].token_position;
  });
  return leaves;
}

std::size_t Graph::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.is_leaf(); }));
}

std::size_t Graph::count_edges(EdgeType t) const {
  return static_cast<std::size_t>(
      std::count_if(edges_.begin(), edges_.end(), [t](const Edge& e) { return e.type == t; }));
}

bool Graph::has_edge(int src, int dst, EdgeType t) const {
  return std::any_of(edges_.begin(), edges_.end(), [&](const Edge& e) {
    return e.src == src && e.dst == dst && e.type == t;
  });
}

std::vector<int> Graph::parents() const {
  std::vector<int> parent(nodes_.size(), -1);
  for (const auto& e : edges_) {
    if (e.type != EdgeType::kChild) continue;
    if (parent[e.dst] != -1) {
      throw GraphError("node " + std::to_string(e.dst) + " has more than one parent");
    }
    parent[e.dst] = e.src;
  }
  return parent;
}

std::vector<std::vector<int>> Graph::children() const {
  std::vector<std::vector<int>> kids(nodes_.size());
  for (const auto& e : edges_) {
    if (e.type == EdgeType::kChild) kids[e.src].push_back(e.dst);
  }
  return kids;
}

namespace {

// Throws CycleError unless every node is reachable from a root.
void check_acyclic(const Graph& g, const std::vector<int>& parent,
                   const std::vector<std::vector<int>>& kids) {
  std::vector<int> stack;
  for (std::size_t i = 0; i < parent.size(); ++i) {
    if (parent[i] == -1) stack.push_back(static_cast<int>(i));
  }
  std::size_t seen = 0;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    ++seen;
    for (int c : kids[v]) stack.push_back(c);
  }
  if (seen != g.size()) throw CycleError();
}

}  // namespace

void Graph::validate() const {
  std::set<int> positions;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    if (n.id != static_cast<int>(i)) throw GraphError("node ids are not dense");
    if (n.is_leaf() && !positions.insert(n.token_position).second) {
      throw GraphError("duplicate token position " + std::to_string(n.token_position));
    }
  }
  std::set<Edge> seen;
  for (const auto& e : edges_) {
    if (e.src == e.dst) throw GraphError("self edge in graph");
    if (!seen.insert(e).second) throw GraphError("duplicate edge");
  }
  check_acyclic(*this, parents(), children());
}

Graph simplify_tree(const Graph& g) {
  if (g.empty()) throw EmptyGraph();
  const auto parent = g.parents();
  const auto kids = g.children();
  check_acyclic(g, parent, kids);

  const int n = static_cast<int>(g.size());
  auto unary = [&](int v) { return !g.nodes()[v].is_leaf() && kids[v].size() == 1; };

  // rep[v] is the node that survives in place of v: v itself, or the end of
  // the unary chain starting at v.
  std::vector<int> rep(n, -1);
  for (int v = 0; v < n; ++v) {
    int r = v;
    while (unary(r)) r = kids[r][0];
    rep[v] = r;
  }

  std::vector<int> new_id(n, -1);
  Graph out;
  for (int v = 0; v < n; ++v) {
    if (rep[v] != v) continue;
    const auto& node = g.nodes()[v];
    new_id[v] = node.is_leaf() ? out.add_leaf(node.token_position) : out.add_internal(node.label);
  }
  for (const auto& e : g.edges()) {
    if (e.type == EdgeType::kChild) {
      if (rep[e.src] != e.src) continue;  // absorbed into the unary chain
      out.add_edge(new_id[e.src], new_id[rep[e.dst]], EdgeType::kChild);
    } else {
      const int s = new_id[rep[e.src]];
      const int d = new_id[rep[e.dst]];
      if (s != d) out.add_edge(s, d, e.type);
    }
  }
  return out;
}

Graph add_sequential_edges(const Graph& g) {
  const auto order = g.leaf_order();
  if (order.empty()) throw EmptyGraph("graph has no leaves");
  Graph out = g;
  for (std::size_t i = 0; i + 1 < order.size(); ++i) {
    out.add_edge(order[i], order[i + 1], EdgeType::kSequential);
  }
  return out;
}

MessageGraph symmetrize_with_self_loops(const Graph& g, bool add_reverse) {
  MessageGraph mg;
  mg.num_nodes = static_cast<int>(g.size());
  std::vector<Edge> edges;
  edges.reserve(g.edges().size() * 2 + g.size());
  for (const auto& e : g.edges()) {
    edges.push_back(e);
    if (add_reverse) edges.push_back({e.dst, e.src, e.type});
  }
  for (int v = 0; v < mg.num_nodes; ++v) edges.push_back({v, v, EdgeType::kSelfLoop});
  auto key = [](const Edge& e) { return std::tie(e.dst, e.src, e.type); };
  std::sort(edges.begin(), edges.end(), [&](const Edge& a, const Edge& b) { return key(a) < key(b); });
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  mg.edges = std::move(edges);
  return mg;
}

void write_graph(std::ostream& out, const Graph& g) {
  for (const auto& n : g.nodes()) {
    if (n.is_leaf()) {
      out << "node " << n.id << " leaf " << n.token_position << '\n';
    } else {
      out << "node " << n.id << " internal " << n.label << '\n';
    }
  }
  for (const auto& e : g.edges()) {
    out << "edge " << e.src << ' ' << e.dst << ' ' << edge_type_name(e.type) << '\n';
  }
}

std::string to_text(const Graph& g) {
  std::ostringstream out;
  write_graph(out, g);
  return out.str();
}

Graph read_graph(std::istream& in) {
  Graph g;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string tag;
    fields >> tag;
    if (tag == "node") {
      int id = -1;
      std::string kind;
      fields >> id >> kind;
      if (id != static_cast<int>(g.size())) throw FormatError(lineno, "node ids must be dense");
      if (kind == "leaf") {
        int pos = -1;
        if (!(fields >> pos)) throw FormatError(lineno, "leaf without token position");
        g.add_leaf(pos);
      } else if (kind == "internal") {
        std::string label;
        fields >> label;
        g.add_internal(label);
      } else {
        throw FormatError(lineno, "unknown node kind '" + kind + "'");
      }
    } else if (tag == "edge") {
      int s = -1, d = -1;
      std::string type;
      if (!(fields >> s >> d >> type)) throw FormatError(lineno, "malformed edge");
      g.add_edge(s, d, parse_edge_type(type));
    } else {
      throw FormatError(lineno, "unknown record '" + tag + "'");
    }
  }
  return g;
}

}  // namespace sqled
