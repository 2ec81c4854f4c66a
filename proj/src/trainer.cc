#include "sqled/trainer.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <random>
#include <thread>

#include "sqled/dataset.h"
#include "sqled/error.h"
#include "sqled/metrics.h"

namespace sqled {

void TrainConfig::validate() const {
  if (batch_beams < 1) throw ConfigError("batch size must be positive");
  if (epochs < 1) throw ConfigError("epochs must be positive");
  if (!(warmup_fraction > 0 && warmup_fraction < 1)) throw ConfigError("warmup fraction must be in (0, 1)");
  if (!(learning_rate > 0)) throw ConfigError("learning rate must be positive");
}

double schedule_factor(int step, int total_steps, int warmup_steps) {
  if (step < warmup_steps) return static_cast<double>(step) / std::max(1, warmup_steps);
  return std::max(0.0, static_cast<double>(total_steps - step) / std::max(1, total_steps - warmup_steps));
}

int warmup_steps_for(int total_steps, double warmup_fraction) {
  return static_cast<int>(std::ceil(total_steps * warmup_fraction));
}

AdamW::AdamW(const Parameters& shape, const TrainConfig& config)
    : config_(config), m_(zeros_like(shape)), v_(zeros_like(shape)) {}

void AdamW::step(Parameters& params, const Parameters& grad, double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(config_.beta1, t_);
  const double c2 = 1.0 - std::pow(config_.beta2, t_);
  auto p = params.tensors();
  const auto g = grad.tensors();
  auto m = m_.tensors();
  auto v = v_.tensors();
  for (std::size_t i = 0; i < p.size(); ++i) {
    auto pa = p[i].second->array();
    const auto ga = g[i].second->array();
    auto ma = m[i].second->array();
    auto va = v[i].second->array();
    pa *= 1.0 - lr * config_.weight_decay;
    ma = config_.beta1 * ma + (1.0 - config_.beta1) * ga;
    va = config_.beta2 * va + (1.0 - config_.beta2) * ga.square();
    pa -= lr * (ma / c1) / ((va / c2).sqrt() + config_.adam_eps);
  }
  if (!params.all_finite()) throw NumericalError("non-finite parameter after update");
}

namespace {

struct DevStats {
  double accuracy = 0.0;
  double auc = std::numeric_limits<double>::quiet_NaN();
};

DevStats evaluate(const Parameters& p, const std::vector<TrainExample>& dev) {
  DevStats s;
  if (dev.empty()) return s;
  const std::vector<double> scores = predict(p, dev);
  std::vector<int> labels;
  std::size_t right = 0;
  for (std::size_t i = 0; i < dev.size(); ++i) {
    labels.push_back(dev[i].label);
    right += ((scores[i] >= 0.5) == (dev[i].label == 1)) ? 1 : 0;
  }
  s.accuracy = static_cast<double>(right) / static_cast<double>(dev.size());
  try {
    s.auc = roc_auc(scores, labels);
  } catch (const DegenerateClasses&) {
  }
  return s;
}

}  // namespace

TrainResult train(const std::vector<TrainExample>& train_set, const std::vector<TrainExample>& dev_set,
                  const Parameters& init, const TrainConfig& config, std::ostream* csv_log) {
  config.validate();
  if (train_set.empty()) throw EmptyDataset("no training examples");

  // Beams in order of first appearance.
  std::vector<std::vector<std::size_t>> beams;
  std::map<std::string, std::size_t> beam_index;
  for (std::size_t i = 0; i < train_set.size(); ++i) {
    auto [it, fresh] = beam_index.emplace(train_set[i].beam_id, beams.size());
    if (fresh) beams.emplace_back();
    beams[it->second].push_back(i);
  }

  const int steps_per_epoch =
      static_cast<int>((beams.size() + static_cast<std::size_t>(config.batch_beams) - 1) / config.batch_beams);
  TrainResult result;
  result.total_steps = steps_per_epoch * config.epochs;
  const int warmup = warmup_steps_for(result.total_steps, config.warmup_fraction);

  Parameters params = init;
  AdamW opt(params, config);
  std::mt19937_64 rng(config.seed);
  const double keep = 1.0 - params.config.dropout_rate;
  const Eigen::Index global_width = 2 * params.config.hidden_dim;
  std::bernoulli_distribution keep_unit(keep);

  if (csv_log) *csv_log << "epoch,step,loss,dev_acc,dev_auc\n";
  std::vector<std::size_t> order(beams.size());
  int step = 0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    seeded_shuffle(order, rng);
    double epoch_loss = 0.0;
    std::size_t epoch_examples = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(config.batch_beams)) {
      const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(config.batch_beams));
      std::vector<std::size_t> batch;
      for (std::size_t b = begin; b < end; ++b) {
        batch.insert(batch.end(), beams[order[b]].begin(), beams[order[b]].end());
      }
      Parameters grad = zeros_like(params);
      const double n = static_cast<double>(batch.size());
      for (std::size_t idx : batch) {
        const TrainExample& ex = train_set[idx];
        Eigen::VectorXd mask;
        if (params.config.dropout_rate > 0) {
          mask.resize(global_width);
          for (Eigen::Index j = 0; j < global_width; ++j) mask(j) = keep_unit(rng) ? 1.0 / keep : 0.0;
        }
        ForwardCache cache;
        const double s = forward(ex.input, params, &cache, mask.size() > 0 ? &mask : nullptr);
        epoch_loss += bce_loss({s}, {ex.label});
        ++epoch_examples;
        const double dlds = bce_loss_grad({s}, {ex.label})[0] / n;
        backward(ex.input, params, cache, dlds * s * (1.0 - s), grad);
      }
      opt.step(params, grad, config.learning_rate * schedule_factor(step, result.total_steps, warmup));
      ++step;
    }

    const DevStats dev = evaluate(params, dev_set);
    EpochLog row{epoch, step, epoch_loss / static_cast<double>(epoch_examples), dev.accuracy, dev.auc};
    result.log.push_back(row);
    if (csv_log) {
      *csv_log << row.epoch << "," << row.step << "," << row.loss << "," << row.dev_accuracy << ","
               << row.dev_auc << "\n";
    }
    if (dev.accuracy > result.best_dev_accuracy) {
      result.best_dev_accuracy = dev.accuracy;
      result.best_epoch = epoch;
      result.best = params;
    }
  }
  return result;
}

std::vector<double> predict(const Parameters& params, const std::vector<PairInput>& pairs, int workers) {
  std::vector<double> out(pairs.size());
  const std::size_t w = static_cast<std::size_t>(std::max(1, workers));
  if (w == 1 || pairs.size() < 2) {
    for (std::size_t i = 0; i < pairs.size(); ++i) out[i] = forward(pairs[i], params);
    return out;
  }
  std::vector<std::exception_ptr> errors(w);
  std::vector<std::thread> threads;
  for (std::size_t k = 0; k < w; ++k) {
    threads.emplace_back([&, k] {
      try {
        for (std::size_t i = k; i < pairs.size(); i += w) out[i] = forward(pairs[i], params);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

std::vector<double> predict(const Parameters& params, const std::vector<TrainExample>& examples, int workers) {
  std::vector<PairInput> pairs;
  pairs.reserve(examples.size());
  for (const auto& e : examples) pairs.push_back(e.input);
  return predict(params, pairs, workers);
}

}  // namespace sqled
