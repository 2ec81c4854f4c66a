#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "sqled/dataset.h"
#include "sqled/metrics.h"

namespace sqled {

struct Curve {
  std::string method;
  std::vector<std::pair<int, double>> points;  // x strictly increasing
};

// Stable descending sort of the predictions by score.
BeamRecord rerank_all(const BeamRecord& beam, const std::vector<double>& scores);

// Reranks only when the top prediction scores below the threshold.
BeamRecord ed_then_rerank(const BeamRecord& beam, const std::vector<double>& scores,
                          double threshold = 0.5);

// Fraction of beams whose first prediction is labeled correct.
double top1_accuracy(const std::vector<BeamRecord>& beams);
// Fraction of beams with at least one correct prediction.
double beam_hit_rate(const std::vector<BeamRecord>& beams);

// (questions answered, precision) at every distinct score threshold.
Curve answer_curve(const std::vector<ScoredExample>& top1, const std::string& method = "");
// Largest x with y >= target, 0 if none.
int questions_at_precision(const Curve& curve, double target = 0.95);

// (interactions, accuracy) for budgets 0..n, lowest scores corrected first.
// Equal scores keep input order.
Curve interaction_curve(const std::vector<ScoredExample>& top1, const std::string& method = "");
// Smallest x with y >= target, -1 if the curve never gets there.
int interactions_for_accuracy(const Curve& curve, double target = 0.95);

// CSV rows "method,x,y" with a header.
void write_curves_csv(std::ostream& out, const std::vector<Curve>& curves);

// Standalone SVG line chart of one panel.
std::string render_svg(const std::vector<Curve>& curves, const std::string& title,
                       const std::string& x_label, const std::string& y_label);

}  // namespace sqled
