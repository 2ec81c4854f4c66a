#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace sqled {

enum class NodeKind : std::uint8_t { kLeaf, kInternal };

enum class EdgeType : std::uint8_t { kChild = 0, kDependency = 1, kSequential = 2, kSelfLoop = 3 };
inline constexpr int kNumEdgeTypes = 4;

std::string_view edge_type_name(EdgeType t);
EdgeType parse_edge_type(std::string_view name);

// A leaf carries the position of its token in the source token list; an
// internal node carries a label from the node-type vocabulary.
struct Node {
  int id = 0;
  NodeKind kind = NodeKind::kInternal;
  int token_position = -1;
  std::string label;

  bool is_leaf() const { return kind == NodeKind::kLeaf; }
  friend bool operator==(const Node&, const Node&) = default;
};

struct Edge {
  int src = 0;
  int dst = 0;
  EdgeType type = EdgeType::kChild;

  friend auto operator<=>(const Edge& a, const Edge& b) {
    return std::tie(a.src, a.dst, a.type) <=> std::tie(b.src, b.dst, b.type);
  }
  friend bool operator==(const Edge&, const Edge&) = default;
};

// Typed-node, typed-edge graph shared by question graphs and SQL parse-tree
// graphs. Child edges point parent -> child and form a forest.
class Graph {
 public:
  Graph() = default;

  int add_leaf(int token_position);
  int add_internal(std::string label);
  // Adds an edge unless the identical (src, dst, type) triple already exists.
  // Returns true when the edge was added.
  bool add_edge(int src, int dst, EdgeType type);

  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  // Leaf node ids sorted by token position.
  std::vector<int> leaf_order() const;

  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }
  std::size_t leaf_count() const;
  std::size_t count_edges(EdgeType t) const;
  bool has_edge(int src, int dst, EdgeType t) const;

  // Child-edge view: parent per node (-1 for roots) and children in edge order.
  std::vector<int> parents() const;
  std::vector<std::vector<int>> children() const;

  // Throws GraphError when a structural invariant is violated.
  void validate() const;

  friend bool operator==(const Graph&, const Graph&) = default;

 private:
  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
};

// Removes every internal node with exactly one child, re-attaching the child
// to the removed node's parent. Non-child edges on removed nodes move to the
// surviving descendant. Node ids are re-densified in original relative order.
Graph simplify_tree(const Graph& g);

// Adds leaf_i -> leaf_{i+1} sequential edges following token order.
Graph add_sequential_edges(const Graph& g);

// Message-passing view used by the encoder. Unlike Graph, it admits reverse
// child edges and self loops.
struct MessageGraph {
  int num_nodes = 0;
  std::vector<Edge> edges;  // sorted by (dst, src, type)
};

// Adds the reverse of every edge (same type) and a SelfLoop edge per node.
// With add_reverse = false only self loops are added (original-direction
// ablation).
MessageGraph symmetrize_with_self_loops(const Graph& g, bool add_reverse = true);

// Line-oriented text form: "node <id> leaf <pos>", "node <id> internal <label>",
// then "edge <src> <dst> <type>".
void write_graph(std::ostream& out, const Graph& g);
std::string to_text(const Graph& g);
Graph read_graph(std::istream& in);

}  // namespace sqled
