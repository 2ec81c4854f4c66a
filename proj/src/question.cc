#include "sqled/question.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "sqled/error.h"

namespace sqled {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

std::string ptb_unescape(const std::string& w) {
  if (w == "-LRB-") return "(";
  if (w == "-RRB-") return ")";
  if (w == "-LSB-") return "[";
  if (w == "-RSB-") return "]";
  if (w == "-LCB-") return "{";
  if (w == "-RCB-") return "}";
  return w;
}

class BracketReader {
 public:
  explicit BracketReader(const std::string& text) : s_(text) {}

  BracketTree read() {
    skip();
    BracketTree t = node();
    skip();
    if (i_ != s_.size()) throw DataError("trailing text after bracketed tree");
    return t;
  }

 private:
  const std::string& s_;
  std::size_t i_ = 0;

  void skip() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
  }
  std::string atom() {
    std::size_t start = i_;
    while (i_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[i_])) && s_[i_] != '(' &&
           s_[i_] != ')') {
      ++i_;
    }
    if (start == i_) throw DataError("empty atom in bracketed tree");
    return s_.substr(start, i_ - start);
  }
  BracketTree node() {
    if (i_ >= s_.size() || s_[i_] != '(') throw DataError("expected '(' in bracketed tree");
    ++i_;
    skip();
    BracketTree t;
    // "( (S ...))" style trees have an empty root label.
    if (i_ < s_.size() && s_[i_] != '(') t.label = atom();
    skip();
    while (i_ < s_.size() && s_[i_] != ')') {
      if (s_[i_] == '(') {
        t.children.push_back(node());
      } else {
        BracketTree leaf;
        leaf.leaf = true;
        leaf.label = atom();
        t.children.push_back(std::move(leaf));
      }
      skip();
    }
    if (i_ >= s_.size()) throw DataError("unbalanced bracketed tree");
    ++i_;
    if (t.label.empty()) t.label = "ROOT";
    if (t.children.empty()) throw DataError("constituent without children");
    return t;
  }
};

void leaves_of(const BracketTree& t, std::vector<std::string>& out) {
  if (t.leaf) {
    out.push_back(t.label);
    return;
  }
  for (const auto& c : t.children) leaves_of(c, out);
}

void add_tree(const BracketTree& t, int parent, int& next_leaf, const std::vector<int>& leaf_ids,
              Graph& g) {
  int id;
  if (t.leaf) {
    id = leaf_ids[next_leaf++];
  } else {
    id = g.add_internal(t.label);
    for (const auto& c : t.children) add_tree(c, id, next_leaf, leaf_ids, g);
  }
  if (parent >= 0) g.add_edge(parent, id, EdgeType::kChild);
}

}  // namespace

BracketTree parse_bracketed(const std::string& text) { return BracketReader(text).read(); }

std::vector<std::string> bracket_leaves(const BracketTree& tree) {
  std::vector<std::string> out;
  leaves_of(tree, out);
  return out;
}

std::size_t bracket_internal_count(const BracketTree& tree) {
  if (tree.leaf) return 0;
  std::size_t n = 1;
  for (const auto& c : tree.children) n += bracket_internal_count(c);
  return n;
}

void validate_annotation(const QuestionAnnotation& a) {
  const std::size_t n = a.tokens.size();
  if (n == 0) throw MismatchError(a.question_id, "no tokens");
  if (a.dep_heads.size() != n || a.dep_rels.size() != n) {
    throw MismatchError(a.question_id, "token, head and relation counts differ (" +
                                           std::to_string(n) + ", " +
                                           std::to_string(a.dep_heads.size()) + ", " +
                                           std::to_string(a.dep_rels.size()) + ")");
  }
  BracketTree tree;
  try {
    tree = parse_bracketed(a.constituency);
  } catch (const DataError& e) {
    throw MismatchError(a.question_id, e.what());
  }
  const auto leaves = bracket_leaves(tree);
  if (leaves.size() != n) throw MismatchError(a.question_id, "tree leaves differ from tokens");
  for (std::size_t i = 0; i < n; ++i) {
    if (leaves[i] != a.tokens[i] && ptb_unescape(leaves[i]) != a.tokens[i]) {
      throw MismatchError(a.question_id, "tree leaf '" + leaves[i] + "' differs from token '" +
                                             a.tokens[i] + "'");
    }
  }
  int roots = 0;
  for (int h : a.dep_heads) {
    if (h < 0 || h > static_cast<int>(n)) throw MismatchError(a.question_id, "head out of range");
    if (h == 0) ++roots;
  }
  if (roots != 1) throw MismatchError(a.question_id, "dependency tree must have exactly one root");
  // Every token must reach the root without revisiting a node.
  for (std::size_t i = 0; i < n; ++i) {
    int cur = static_cast<int>(i) + 1;
    std::size_t steps = 0;
    while (cur != 0) {
      cur = a.dep_heads[cur - 1];
      if (++steps > n) throw MismatchError(a.question_id, "dependency heads contain a cycle");
    }
  }
}

AnnotationMap read_annotations(std::istream& in) {
  AnnotationMap out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 5) throw FormatError(lineno, "expected 5 tab-separated fields");
    QuestionAnnotation a;
    a.question_id = fields[0];
    if (a.question_id.empty()) throw FormatError(lineno, "empty question id");
    a.tokens = split_ws(fields[1]);
    for (const auto& h : split_ws(fields[2])) {
      try {
        std::size_t used = 0;
        a.dep_heads.push_back(std::stoi(h, &used));
        if (used != h.size()) throw std::invalid_argument(h);
      } catch (const std::exception&) {
        throw FormatError(lineno, "non-integer head '" + h + "'");
      }
    }
    a.dep_rels = split_ws(fields[3]);
    a.constituency = fields[4];
    validate_annotation(a);
    if (!out.emplace(a.question_id, a).second) {
      throw FormatError(lineno, "duplicate question id " + a.question_id);
    }
  }
  return out;
}

AnnotationMap read_annotations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open annotation file " + path.string());
  return read_annotations(in);
}

void write_annotation(std::ostream& out, const QuestionAnnotation& a) {
  auto join = [&](const auto& items) {
    std::ostringstream s;
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (i) s << ' ';
      s << items[i];
    }
    return s.str();
  };
  out << a.question_id << '\t' << join(a.tokens) << '\t' << join(a.dep_heads) << '\t'
      << join(a.dep_rels) << '\t' << a.constituency << '\n';
}

void write_annotations(const std::filesystem::path& path, const AnnotationMap& annotations) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& [id, a] : annotations) write_annotation(out, a);
}

Graph build_question_graph(const QuestionAnnotation& a, bool simplify) {
  validate_annotation(a);
  const BracketTree tree = parse_bracketed(a.constituency);
  Graph g;
  // Leaves get the first ids so token i is node i before simplification.
  std::vector<int> leaf_ids;
  for (std::size_t i = 0; i < a.tokens.size(); ++i) {
    leaf_ids.push_back(g.add_leaf(static_cast<int>(i)));
  }
  int next_leaf = 0;
  add_tree(tree, -1, next_leaf, leaf_ids, g);
  for (std::size_t d = 0; d < a.dep_heads.size(); ++d) {
    const int h = a.dep_heads[d];
    if (h == 0) continue;
    g.add_edge(leaf_ids[h - 1], leaf_ids[d], EdgeType::kDependency);
  }
  if (simplify) g = simplify_tree(g);
  return add_sequential_edges(g);
}

std::vector<std::string> question_leaf_tokens(const QuestionAnnotation& a) {
  std::vector<std::string> out;
  out.reserve(a.tokens.size());
  for (auto t : a.tokens) {
    std::transform(t.begin(), t.end(), t.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    out.push_back(std::move(t));
  }
  return out;
}

AnnotationMap convert_conllu(std::istream& conllu, std::istream& trees) {
  AnnotationMap out;
  QuestionAnnotation cur;
  std::string sent_id;
  std::size_t index = 0;
  std::size_t lineno = 0;

  auto flush = [&]() {
    if (cur.tokens.empty()) return;
    std::string tree;
    do {
      if (!std::getline(trees, tree)) throw DataError("tree file has fewer trees than sentences");
    } while (tree.find_first_not_of(" \t\r") == std::string::npos);
    if (tree.back() == '\r') tree.pop_back();
    cur.question_id = sent_id.empty() ? std::to_string(index) : sent_id;
    cur.constituency = tree;
    validate_annotation(cur);
    out[cur.question_id] = cur;
    ++index;
    cur = QuestionAnnotation{};
    sent_id.clear();
  };

  std::string line;
  while (std::getline(conllu, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      flush();
      continue;
    }
    if (line[0] == '#') {
      const std::string key = "# sent_id =";
      if (line.rfind(key, 0) == 0) {
        sent_id = line.substr(key.size());
        sent_id.erase(0, sent_id.find_first_not_of(' '));
      }
      continue;
    }
    const auto cols = split(line, '\t');
    if (cols.size() < 8) throw FormatError(lineno, "CoNLL-U line with fewer than 8 columns");
    // Multi-word token ranges and empty nodes are not syntactic words.
    if (cols[0].find_first_of("-.") != std::string::npos) continue;
    cur.tokens.push_back(cols[1]);
    try {
      cur.dep_heads.push_back(std::stoi(cols[6]));
    } catch (const std::exception&) {
      throw FormatError(lineno, "non-integer head");
    }
    cur.dep_rels.push_back(cols[7]);
  }
  flush();
  return out;
}

}  // namespace sqled
