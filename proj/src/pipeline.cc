#include "sqled/pipeline.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "sqled/error.h"
#include "sqled/features.h"
#include "sqled/trainer.h"

namespace sqled {

std::string_view method_name(ScoreMethod m) {
  switch (m) {
    case ScoreMethod::kModel: return "model";
    case ScoreMethod::kConfidence: return "confidence";
    case ScoreMethod::kDropout: return "dropout";
    case ScoreMethod::kOracle: return "oracle";
  }
  return "model";
}

ScoreMethod parse_method(std::string_view name) {
  for (ScoreMethod m : {ScoreMethod::kModel, ScoreMethod::kConfidence, ScoreMethod::kDropout, ScoreMethod::kOracle}) {
    if (method_name(m) == name) return m;
  }
  throw ConfigError("unknown scoring method '" + std::string(name) + "'");
}

BeamScores method_scores(const std::vector<BeamRecord>& beams, ScoreMethod method, const BeamScores* model) {
  BeamScores out;
  out.reserve(beams.size());
  if (method == ScoreMethod::kModel) {
    if (!model) throw ConfigError("model scores required");
    if (model->size() != beams.size()) throw LengthMismatch(model->size(), beams.size());
    for (std::size_t i = 0; i < beams.size(); ++i) {
      if ((*model)[i].size() != beams[i].predictions.size()) {
        throw MismatchError(beams[i].question_id, "score count differs from prediction count");
      }
    }
    return *model;
  }
  for (const auto& b : beams) {
    std::vector<double> s;
    switch (method) {
      case ScoreMethod::kConfidence: {
        std::vector<double> parser;
        for (const auto& p : b.predictions) parser.push_back(p.parser_score);
        s = approximate_confidence(parser);
        break;
      }
      case ScoreMethod::kDropout:
        for (std::size_t r = 0; r < b.predictions.size(); ++r) {
          const auto& d = b.predictions[r].dropout_scores;
          if (!d) {
            if (r == 0) throw MismatchError(b.question_id, "top prediction has no dropout scores");
            s.push_back(std::numeric_limits<double>::quiet_NaN());
          } else {
            s.push_back(-dropout_uncertainty(*d));
          }
        }
        break;
      case ScoreMethod::kOracle:
        for (const auto& p : b.predictions) {
          if (!p.label) throw MissingLabels(b.question_id);
          s.push_back(p.label->correct() ? 1.0 : 0.0);
        }
        break;
      case ScoreMethod::kModel:
        break;
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<ScoredExample> top1_examples(const std::vector<BeamRecord>& beams, const BeamScores& scores) {
  if (scores.size() != beams.size()) throw LengthMismatch(scores.size(), beams.size());
  std::vector<ScoredExample> out;
  for (std::size_t i = 0; i < beams.size(); ++i) {
    const BeamRecord& b = beams[i];
    if (b.predictions.empty()) throw EmptyBeam();
    if (!b.predictions[0].label) throw MissingLabels(b.question_id);
    if (scores[i].empty()) throw MismatchError(b.question_id, "no score for the top prediction");
    out.push_back({b.question_id, b.db_id, scores[i][0], b.predictions[0].label->correct() ? 1 : 0, 0});
  }
  return out;
}

BeamScores score_predictions(const Model& model, const std::vector<BeamRecord>& beams,
                             const AnnotationMap& annotations, const EmbeddingTable* embeddings, int workers) {
  const std::vector<double> flat = predict(model.params, make_inputs(beams, annotations, model, embeddings), workers);
  BeamScores out;
  std::size_t k = 0;
  for (const auto& b : beams) {
    out.emplace_back(flat.begin() + static_cast<std::ptrdiff_t>(k),
                     flat.begin() + static_cast<std::ptrdiff_t>(k + b.predictions.size()));
    k += b.predictions.size();
  }
  return out;
}

void write_scores(const std::filesystem::path& path, const std::vector<BeamRecord>& beams,
                  const BeamScores& scores) {
  if (scores.size() != beams.size()) throw LengthMismatch(scores.size(), beams.size());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "question_id,rank,score\n";
  char buf[64];
  for (std::size_t i = 0; i < beams.size(); ++i) {
    if (scores[i].size() != beams[i].predictions.size()) {
      throw MismatchError(beams[i].question_id, "score count differs from prediction count");
    }
    for (std::size_t r = 0; r < scores[i].size(); ++r) {
      std::snprintf(buf, sizeof buf, "%.17g", scores[i][r]);
      out << beams[i].question_id << "," << r << "," << buf << "\n";
    }
  }
}

BeamScores read_scores(const std::filesystem::path& path, const std::vector<BeamRecord>& beams) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::map<std::pair<std::string, std::size_t>, double> rows;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (number == 1 || line.empty()) continue;
    const auto a = line.rfind(',');
    const auto b = a == std::string::npos || a == 0 ? std::string::npos : line.rfind(',', a - 1);
    if (b == std::string::npos) throw FormatError(number, "expected question_id,rank,score");
    try {
      const std::size_t rank = std::stoul(line.substr(b + 1, a - b - 1));
      rows[{line.substr(0, b), rank}] = std::stod(line.substr(a + 1));
    } catch (const std::logic_error&) {
      throw FormatError(number, "bad rank or score");
    }
  }
  BeamScores out;
  std::size_t used = 0;
  for (const auto& beam : beams) {
    std::vector<double> s;
    for (std::size_t r = 0; r < beam.predictions.size(); ++r) {
      const auto it = rows.find({beam.question_id, r});
      if (it == rows.end()) throw MismatchError(beam.question_id, "no score for rank " + std::to_string(r));
      s.push_back(it->second);
      ++used;
    }
    out.push_back(std::move(s));
  }
  if (used != rows.size()) throw MismatchError(path.string(), "score file has rows for unknown predictions");
  return out;
}

}  // namespace sqled
