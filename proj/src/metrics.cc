#include "sqled/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "sqled/dataset.h"
#include "sqled/error.h"

namespace sqled {

namespace {

ClassMetrics class_metrics(std::size_t tp, std::size_t fp, std::size_t fn) {
  ClassMetrics m;
  if (tp + fp == 0) {
    m.precision_undefined = true;
  } else {
    m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  }
  if (tp + fn == 0) {
    m.recall_undefined = true;
  } else {
    m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  }
  if (m.precision + m.recall > 0) m.f1 = 2 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

double accuracy_at(const std::vector<ScoredExample>& examples, double threshold) {
  std::size_t right = 0;
  for (const auto& e : examples) right += ((e.score >= threshold) == (e.label == 1)) ? 1 : 0;
  return static_cast<double>(right) / static_cast<double>(examples.size());
}

}  // namespace

MetricsReport confusion_metrics(const std::vector<ScoredExample>& examples, double threshold) {
  if (examples.empty()) throw EmptyInput("no examples to evaluate");
  MetricsReport r;
  r.threshold = threshold;
  for (const auto& e : examples) {
    const bool predicted = e.score >= threshold;
    if (e.label == 1) {
      (predicted ? r.true_pos : r.false_neg) += 1;
    } else {
      (predicted ? r.false_pos : r.true_neg) += 1;
    }
  }
  r.positive = class_metrics(r.true_pos, r.false_pos, r.false_neg);
  r.negative = class_metrics(r.true_neg, r.false_neg, r.false_pos);
  r.accuracy = static_cast<double>(r.true_pos + r.true_neg) / static_cast<double>(examples.size());
  return r;
}

double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) throw ArityMismatch(scores.size(), labels.size());
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Concordant pairs counted in halves so that the sum stays an exact integer.
  std::uint64_t twice_concordant = 0;
  std::uint64_t neg_below = 0, pos = 0, neg = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    std::uint64_t gp = 0, gn = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] == 1 ? gp : gn) += 1;
      ++j;
    }
    twice_concordant += 2 * gp * neg_below + gp * gn;
    neg_below += gn;
    pos += gp;
    neg += gn;
    i = j;
  }
  if (pos == 0 || neg == 0) throw DegenerateClasses();
  return static_cast<double>(twice_concordant) / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
}

double roc_auc(const std::vector<ScoredExample>& examples) {
  std::vector<double> scores;
  std::vector<int> labels;
  for (const auto& e : examples) {
    scores.push_back(e.score);
    labels.push_back(e.label);
  }
  return roc_auc(scores, labels);
}

std::vector<double> approximate_confidence(const std::vector<double>& parser_scores) {
  if (parser_scores.empty()) throw EmptyBeam();
  const double top = *std::max_element(parser_scores.begin(), parser_scores.end());
  std::vector<double> out;
  double z = 0.0;
  for (double s : parser_scores) {
    out.push_back(std::exp(s - top));
    z += out.back();
  }
  for (double& p : out) p /= z;
  return out;
}

double dropout_uncertainty(const std::vector<double>& dropout_scores) {
  if (dropout_scores.size() != kDropoutPasses) throw ArityMismatch(kDropoutPasses, dropout_scores.size());
  // Centered on the first value so identical passes give exactly zero.
  const double origin = dropout_scores.front();
  double mean = 0.0;
  for (double s : dropout_scores) mean += s - origin;
  mean /= static_cast<double>(dropout_scores.size());
  double var = 0.0;
  for (double s : dropout_scores) var += (s - origin - mean) * (s - origin - mean);
  return std::sqrt(var / static_cast<double>(dropout_scores.size()));
}

double best_threshold(const std::vector<ScoredExample>& examples) {
  if (examples.empty()) throw EmptyInput("no examples for threshold selection");
  std::set<double> unique;
  for (const auto& e : examples) unique.insert(e.score);
  std::vector<double> candidates = {-std::numeric_limits<double>::infinity()};
  for (auto it = unique.begin(); std::next(it) != unique.end(); ++it) {
    candidates.push_back(*it + (*std::next(it) - *it) / 2);
  }
  candidates.push_back(std::numeric_limits<double>::infinity());

  // Sweep in ascending order keeping >= so later (higher) thresholds win ties.
  double best = candidates.front();
  double best_acc = -1.0;
  for (double t : candidates) {
    const double acc = accuracy_at(examples, t);
    if (acc >= best_acc) {
      best_acc = acc;
      best = t;
    }
  }
  return best;
}

KFoldReport kfold_eval(const std::vector<ScoredExample>& examples, int k, std::uint64_t seed) {
  if (examples.empty()) throw EmptyInput("no examples to evaluate");
  if (k < 2) throw ConfigError("k-fold evaluation needs k >= 2");
  std::set<std::string> db_set;
  for (const auto& e : examples) db_set.insert(e.db_id);
  std::vector<std::string> dbs(db_set.begin(), db_set.end());
  if (dbs.size() < static_cast<std::size_t>(k)) throw TooFewDatabases(dbs.size(), static_cast<std::size_t>(k));
  std::mt19937_64 rng(seed);
  seeded_shuffle(dbs, rng);

  KFoldReport report;
  report.fold_databases.resize(static_cast<std::size_t>(k));
  std::map<std::string, int> fold_of;
  for (std::size_t i = 0; i < dbs.size(); ++i) {
    fold_of[dbs[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
    report.fold_databases[i % static_cast<std::size_t>(k)].push_back(dbs[i]);
  }
  for (auto& f : report.fold_databases) std::sort(f.begin(), f.end());

  MetricsReport& mean = report.mean;
  double auc_sum = 0.0;
  int auc_folds = 0;
  double threshold_sum = 0.0;
  for (int f = 0; f < k; ++f) {
    std::vector<ScoredExample> train, test;
    for (const auto& e : examples) (fold_of.at(e.db_id) == f ? test : train).push_back(e);
    const double t = best_threshold(train);
    MetricsReport r = confusion_metrics(test, t);
    try {
      r.auc = roc_auc(test);
      auc_sum += *r.auc;
      ++auc_folds;
    } catch (const DegenerateClasses&) {
    }
    const double w = 1.0 / k;
    mean.positive.precision += w * r.positive.precision;
    mean.positive.recall += w * r.positive.recall;
    mean.positive.f1 += w * r.positive.f1;
    mean.negative.precision += w * r.negative.precision;
    mean.negative.recall += w * r.negative.recall;
    mean.negative.f1 += w * r.negative.f1;
    mean.accuracy += w * r.accuracy;
    mean.true_pos += r.true_pos;
    mean.false_pos += r.false_pos;
    mean.true_neg += r.true_neg;
    mean.false_neg += r.false_neg;
    threshold_sum += std::isfinite(t) ? t : 0.0;
    report.folds.push_back(r);
  }
  mean.threshold = threshold_sum / k;
  try {
    mean.auc = roc_auc(examples);
  } catch (const DegenerateClasses&) {
  }
  if (auc_folds > 0) mean.auc_fold_mean = auc_sum / auc_folds;
  return report;
}

std::string format_metrics_table(const std::vector<std::pair<std::string, MetricsReport>>& rows) {
  std::size_t width = 6;
  for (const auto& [name, r] : rows) width = std::max(width, name.size());
  auto pct = [](double v) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%6.1f", 100.0 * v);
    return std::string(buf);
  };
  auto pad = [](const std::string& s, std::size_t n) { return s + std::string(n - std::min(n, s.size()), ' '); };
  std::ostringstream out;
  out << pad("Method", width) << " | " << pad("Positive", 20) << " | " << pad("Negative", 20)
      << " |    Acc |    AUC\n";
  out << pad("", width) << " | " << "     P      R     F1" << " | " << "     P      R     F1"
      << " |        |\n";
  out << std::string(width, '-') << "-+-" << std::string(20, '-') << "-+-" << std::string(20, '-')
      << "-+-" << std::string(6, '-') << "-+-" << std::string(6, '-') << "\n";
  for (const auto& [name, r] : rows) {
    out << pad(name, width) << " | " << pct(r.positive.precision) << " " << pct(r.positive.recall)
        << " " << pct(r.positive.f1) << " | " << pct(r.negative.precision) << " "
        << pct(r.negative.recall) << " " << pct(r.negative.f1) << " | " << pct(r.accuracy) << " | "
        << (r.auc ? pct(*r.auc) : std::string("     -")) << "\n";
  }
  return out.str();
}

namespace {

nlohmann::json report_json(const MetricsReport& r) {
  auto cls = [](const ClassMetrics& c) {
    return nlohmann::json{{"precision", c.precision},
                          {"recall", c.recall},
                          {"f1", c.f1},
                          {"precision_undefined", c.precision_undefined},
                          {"recall_undefined", c.recall_undefined}};
  };
  nlohmann::json j{{"positive", cls(r.positive)},
                   {"negative", cls(r.negative)},
                   {"accuracy", r.accuracy},
                   {"threshold", std::isfinite(r.threshold) ? nlohmann::json(r.threshold)
                                                            : nlohmann::json(r.threshold > 0 ? "inf" : "-inf")},
                   {"confusion", {{"tp", r.true_pos}, {"fp", r.false_pos}, {"tn", r.true_neg}, {"fn", r.false_neg}}}};
  if (r.auc) j["auc"] = *r.auc;
  if (r.auc_fold_mean) j["auc_fold_mean"] = *r.auc_fold_mean;
  return j;
}

}  // namespace

std::string metrics_to_json(const std::vector<std::pair<std::string, KFoldReport>>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& [name, rep] : rows) {
    nlohmann::json folds = nlohmann::json::array();
    for (std::size_t i = 0; i < rep.folds.size(); ++i) {
      nlohmann::json f = report_json(rep.folds[i]);
      f["databases"] = rep.fold_databases[i];
      folds.push_back(f);
    }
    out.push_back({{"method", name}, {"mean", report_json(rep.mean)}, {"folds", folds}});
  }
  return out.dump(2) + "\n";
}

}  // namespace sqled
