#include "sqled/features.h"

#include <sstream>

#include "sqled/error.h"
#include "sqled/sql.h"
#include "sqled/sql_rewrite.h"

namespace sqled {

std::pair<Graph, std::vector<std::string>> sql_graph(const std::string& sql, const FeatureOptions& options) {
  try {
    const SqlAst ast = parse_sql(sql);
    return {ast_to_graph(ast, SqlGraphOptions{options.prune_joins, options.simplify_graphs}),
            leaf_vocabulary_tokens(ast)};
  } catch (const DataError&) {
  }
  std::vector<std::string> tokens;
  try {
    for (const auto& t : tokenize(sql)) tokens.push_back(t.text);
  } catch (const LexError&) {
    std::istringstream in(sql);
    for (std::string w; in >> w;) tokens.push_back(w);
  }
  if (tokens.empty()) tokens.push_back("<empty>");
  Graph g;
  const int root = g.add_internal("unparsed");
  for (std::size_t i = 0; i < tokens.size(); ++i) g.add_edge(root, g.add_leaf(static_cast<int>(i)), EdgeType::kChild);
  return {add_sequential_edges(g), tokens};
}

namespace {

const QuestionAnnotation& annotation_for(const AnnotationMap& annotations, const std::string& id) {
  const auto it = annotations.find(id);
  if (it == annotations.end()) throw MismatchError(id, "no annotation for question");
  return it->second;
}

void count_graph(const Graph& g, const std::vector<std::string>& tokens, std::map<std::string, int>& tok,
                 std::map<std::string, int>& lab) {
  for (const auto& n : g.nodes()) {
    if (n.is_leaf()) {
      tok[tokens[static_cast<std::size_t>(n.token_position)]] += 1;
    } else {
      lab[n.label] += 1;
    }
  }
}

std::optional<Mat> external_rows(const EmbeddingTable* embeddings, const std::string& key, std::size_t tokens) {
  if (!embeddings) return std::nullopt;
  const auto it = embeddings->find(key);
  if (it == embeddings->end()) throw DataError("no embedding entry for " + key);
  Mat rows = token_vectors(it->second);
  if (static_cast<std::size_t>(rows.rows()) != tokens) {
    throw MismatchError(key, "embedding has " + std::to_string(rows.rows()) + " tokens, graph has " +
                                 std::to_string(tokens));
  }
  return rows;
}

}  // namespace

std::pair<Vocabulary, Vocabulary> build_vocabularies(const std::vector<BeamRecord>& beams,
                                                     const AnnotationMap& annotations,
                                                     const FeatureOptions& options) {
  std::map<std::string, int> tok, lab;
  for (const auto& b : beams) {
    const QuestionAnnotation& a = annotation_for(annotations, b.question_id);
    count_graph(build_question_graph(a, options.simplify_graphs), question_leaf_tokens(a), tok, lab);
    for (const auto& p : b.predictions) {
      const auto [g, tokens] = sql_graph(p.sql, options);
      count_graph(g, tokens, tok, lab);
    }
  }
  return {Vocabulary::build(tok), Vocabulary::build(lab)};
}

std::string sql_embedding_key(const std::string& sql) { return "sql:" + normalized_sql_key(sql); }

PairInput make_pair_input(const QuestionAnnotation& question, const std::string& sql, const Model& model,
                          const EmbeddingTable* embeddings) {
  const FeatureOptions options{model.simplify_graphs, model.prune_joins, model.add_reverse};
  PairInput in;
  const std::vector<std::string> q_tokens = question_leaf_tokens(question);
  in.question = make_graph_input(build_question_graph(question, options.simplify_graphs), q_tokens, model.tokens,
                                 model.labels, options.add_reverse);
  in.question.external = external_rows(embeddings, question.question_id, q_tokens.size());
  const auto [g, s_tokens] = sql_graph(sql, options);
  in.sql = make_graph_input(g, s_tokens, model.tokens, model.labels, options.add_reverse);
  in.sql.external = external_rows(embeddings, sql_embedding_key(sql), s_tokens.size());
  return in;
}

std::vector<TrainExample> make_examples(const std::vector<BeamRecord>& beams, const AnnotationMap& annotations,
                                        const Model& model, const EmbeddingTable* embeddings) {
  std::vector<TrainExample> out;
  for (const auto& b : beams) {
    const QuestionAnnotation& a = annotation_for(annotations, b.question_id);
    for (const auto& p : b.predictions) {
      if (!p.label) throw MissingLabels(b.question_id);
      if (p.label->verdict == Verdict::kUnexecutable) continue;
      out.push_back({make_pair_input(a, p.sql, model, embeddings), p.label->correct() ? 1 : 0, b.question_id,
                     b.db_id});
    }
  }
  return out;
}

std::vector<PairInput> make_inputs(const std::vector<BeamRecord>& beams, const AnnotationMap& annotations,
                                   const Model& model, const EmbeddingTable* embeddings) {
  std::vector<PairInput> out;
  for (const auto& b : beams) {
    const QuestionAnnotation& a = annotation_for(annotations, b.question_id);
    for (const auto& p : b.predictions) out.push_back(make_pair_input(a, p.sql, model, embeddings));
  }
  return out;
}

}  // namespace sqled
