#pragma once

#include <string>
#include <vector>

#include "sqled/dataset.h"
#include "sqled/metrics.h"
#include "sqled/model.h"
#include "sqled/question.h"
#include "sqled/trainer.h"

namespace sqled {

struct FeatureOptions {
  bool simplify_graphs = true;
  bool prune_joins = true;
  bool add_reverse = true;
};

// SQL graph and its leaf tokens. Queries outside the grammar fall back to a
// flat graph: one internal node over the raw tokens.
std::pair<Graph, std::vector<std::string>> sql_graph(const std::string& sql, const FeatureOptions& options);

// Token and internal-label vocabularies over the question and SQL graphs of
// the given beams.
std::pair<Vocabulary, Vocabulary> build_vocabularies(const std::vector<BeamRecord>& beams,
                                                     const AnnotationMap& annotations,
                                                     const FeatureOptions& options);

// Embedding keys: the question id for question leaves, "sql:" followed by the
// normalized query for SQL leaves.
std::string sql_embedding_key(const std::string& sql);

PairInput make_pair_input(const QuestionAnnotation& question, const std::string& sql,
                          const Model& model, const EmbeddingTable* embeddings = nullptr);

// One example per labeled prediction. Unexecutable predictions are skipped.
// Throws MismatchError for questions without annotations.
std::vector<TrainExample> make_examples(const std::vector<BeamRecord>& beams,
                                        const AnnotationMap& annotations, const Model& model,
                                        const EmbeddingTable* embeddings = nullptr);

// Every prediction of every beam, in file order.
std::vector<PairInput> make_inputs(const std::vector<BeamRecord>& beams, const AnnotationMap& annotations,
                                   const Model& model, const EmbeddingTable* embeddings = nullptr);

}  // namespace sqled
