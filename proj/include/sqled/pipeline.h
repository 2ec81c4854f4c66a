#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "sqled/dataset.h"
#include "sqled/metrics.h"
#include "sqled/model.h"
#include "sqled/question.h"

namespace sqled {

// Scores of every prediction, parallel to beams[i].predictions.
using BeamScores = std::vector<std::vector<double>>;

// Higher is always more confident.
//   model       scores produced by a trained checkpoint
//   confidence  softmax over the beam's parser scores
//   dropout     negated standard deviation of the dropout passes
//   oracle      the execution label itself
enum class ScoreMethod { kModel, kConfidence, kDropout, kOracle };

std::string_view method_name(ScoreMethod m);
// Throws ConfigError.
ScoreMethod parse_method(std::string_view name);

// Throws DataError when the method's inputs are missing; `model` is required
// for kModel and must match the beam shapes.
BeamScores method_scores(const std::vector<BeamRecord>& beams, ScoreMethod method,
                         const BeamScores* model = nullptr);

// The first prediction of every beam with its label and score.
// Throws MissingLabels.
std::vector<ScoredExample> top1_examples(const std::vector<BeamRecord>& beams, const BeamScores& scores);

// Checkpoint scores for every prediction, sharded across workers.
BeamScores score_predictions(const Model& model, const std::vector<BeamRecord>& beams,
                             const AnnotationMap& annotations, const EmbeddingTable* embeddings = nullptr,
                             int workers = 1);

// CSV with header question_id,rank,score; one row per prediction.
void write_scores(const std::filesystem::path& path, const std::vector<BeamRecord>& beams,
                  const BeamScores& scores);
// Aligns a score file with the beams. Throws MismatchError on missing or
// surplus rows.
BeamScores read_scores(const std::filesystem::path& path, const std::vector<BeamRecord>& beams);

}  // namespace sqled
