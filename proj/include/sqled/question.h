#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "sqled/graph.h"

namespace sqled {

// Precomputed linguistic annotation of one question.
struct QuestionAnnotation {
  std::string question_id;
  std::vector<std::string> tokens;
  std::vector<int> dep_heads;  // 1-based head index, 0 = artificial root
  std::vector<std::string> dep_rels;
  std::string constituency;  // bracketed tree whose leaves are the tokens

  friend bool operator==(const QuestionAnnotation&, const QuestionAnnotation&) = default;
};

using AnnotationMap = std::map<std::string, QuestionAnnotation>;

// Bracketed constituency tree, e.g. "(ROOT (NP (NN dogs)))".
struct BracketTree {
  std::string label;  // category for internal nodes, word for leaves
  bool leaf = false;
  std::vector<BracketTree> children;
};

BracketTree parse_bracketed(const std::string& text);
std::vector<std::string> bracket_leaves(const BracketTree& tree);
std::size_t bracket_internal_count(const BracketTree& tree);

// Checks the annotation invariants; throws MismatchError.
void validate_annotation(const QuestionAnnotation& a);

// One record per line: id TAB tokens TAB heads TAB relations TAB tree, with
// space-separated lists.
AnnotationMap read_annotations(std::istream& in);
AnnotationMap read_annotations(const std::filesystem::path& path);
void write_annotation(std::ostream& out, const QuestionAnnotation& a);
void write_annotations(const std::filesystem::path& path, const AnnotationMap& annotations);

// Merges the constituency tree (child edges) and the dependency tree
// (dependency edges between leaves, root arc dropped), optionally simplifies,
// then adds sequential edges.
Graph build_question_graph(const QuestionAnnotation& a, bool simplify);

// Lower-cased tokens, used as leaf vocabulary.
std::vector<std::string> question_leaf_tokens(const QuestionAnnotation& a);

// Joins a CoNLL-U file with a file of bracketed trees (one per line, same
// sentence order). Sentence ids come from "# sent_id =" comments or, when
// absent, from the running index.
AnnotationMap convert_conllu(std::istream& conllu, std::istream& trees);

}  // namespace sqled
