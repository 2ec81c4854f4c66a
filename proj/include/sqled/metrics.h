#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sqled {

// One scored prediction. label 1 means the prediction is correct.
struct ScoredExample {
  std::string question_id;
  std::string db_id;
  double score = 0.0;
  int label = 0;
  int beam_rank = 0;
};

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  // Set when the denominator was zero and the value defaulted to 0.
  bool precision_undefined = false;
  bool recall_undefined = false;
};

struct MetricsReport {
  ClassMetrics positive;  // correct predictions
  ClassMetrics negative;  // errors
  double accuracy = 0.0;
  double threshold = 0.5;
  std::size_t true_pos = 0, false_pos = 0, true_neg = 0, false_neg = 0;
  std::optional<double> auc;           // pooled over all examples
  std::optional<double> auc_fold_mean;  // k-fold only
};

// Predicts "correct" iff score >= threshold.
MetricsReport confusion_metrics(const std::vector<ScoredExample>& examples, double threshold);

// Normalized Mann-Whitney statistic, ties counted one half.
double roc_auc(const std::vector<ScoredExample>& examples);
double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels);

// Softmax over a deduplicated beam's parser scores.
std::vector<double> approximate_confidence(const std::vector<double>& parser_scores);

// Population standard deviation of exactly ten dropout passes.
double dropout_uncertainty(const std::vector<double>& dropout_scores);

// Exhaustive sweep over -inf, midpoints of sorted unique scores, and +inf.
// Ties in accuracy go to the higher threshold.
double best_threshold(const std::vector<ScoredExample>& examples);

struct KFoldReport {
  MetricsReport mean;  // fold metrics averaged, pooled AUC attached
  std::vector<MetricsReport> folds;
  std::vector<std::vector<std::string>> fold_databases;
};

// Folds partition the databases (seeded shuffle, round robin). Each fold's
// threshold is chosen on the remaining folds.
KFoldReport kfold_eval(const std::vector<ScoredExample>& examples, int k = 5,
                       std::uint64_t seed = 0);

// Aligned text table with columns Method | Pos P R F1 | Neg P R F1 | Acc | AUC,
// percentages with one decimal.
std::string format_metrics_table(const std::vector<std::pair<std::string, MetricsReport>>& rows);

// Machine-readable report.
std::string metrics_to_json(const std::vector<std::pair<std::string, KFoldReport>>& rows);

}  // namespace sqled
