#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "sqled/error.h"
#include "sqled/trainer.h"
#include "support/model_gen.h"

namespace sqled {
namespace {

std::vector<TrainExample> random_examples(std::mt19937_64& rng, int beams, int per_beam) {
  std::vector<TrainExample> out;
  for (int b = 0; b < beams; ++b) {
    for (int i = 0; i < per_beam; ++i) {
      out.push_back({testing::random_pair(rng, 8), static_cast<int>(rng() % 2), "q" + std::to_string(b),
                     "db" + std::to_string(b % 3)});
    }
  }
  return out;
}

TEST(Schedule, WarmupThenLinearDecay) {
  EXPECT_EQ(warmup_steps_for(420, 0.1), 42);
  EXPECT_EQ(warmup_steps_for(105, 0.1), 11);
  EXPECT_EQ(schedule_factor(0, 100, 10), 0.0);
  EXPECT_EQ(schedule_factor(5, 100, 10), 0.5);
  EXPECT_EQ(schedule_factor(10, 100, 10), 1.0);
  EXPECT_EQ(schedule_factor(55, 100, 10), 0.5);
  EXPECT_EQ(schedule_factor(100, 100, 10), 0.0);
  double previous = 2.0;
  for (int s = 10; s <= 100; ++s) {
    EXPECT_LT(schedule_factor(s, 100, 10), previous);
    previous = schedule_factor(s, 100, 10);
  }
}

TEST(AdamW, MatchesScalarReference) {
  std::mt19937_64 rng(1);
  const Parameters init = testing::busy_parameters(testing::small_config(1), rng);
  Parameters grad = zeros_like(init);
  std::normal_distribution<double> n(0.0, 1.0);
  for (auto& [name, m] : grad.tensors()) {
    for (Eigen::Index i = 0; i < m->size(); ++i) m->data()[i] = n(rng);
  }
  TrainConfig tc;
  Parameters p = init;
  AdamW opt(p, tc);
  const double rates[] = {1e-3, 5e-4, 2e-3};
  for (double lr : rates) opt.step(p, grad, lr);
  EXPECT_EQ(opt.steps_taken(), 3);

  const auto got = p.tensors();
  const auto start = init.tensors();
  const auto g = grad.tensors();
  for (std::size_t t = 0; t < got.size(); ++t) {
    for (Eigen::Index i = 0; i < got[t].second->size(); ++i) {
      double x = start[t].second->data()[i], m = 0, v = 0;
      const double gi = g[t].second->data()[i];
      for (int k = 0; k < 3; ++k) {
        x -= rates[k] * tc.weight_decay * x;
        m = tc.beta1 * m + (1 - tc.beta1) * gi;
        v = tc.beta2 * v + (1 - tc.beta2) * gi * gi;
        const double mh = m / (1 - std::pow(tc.beta1, k + 1));
        const double vh = v / (1 - std::pow(tc.beta2, k + 1));
        x -= rates[k] * mh / (std::sqrt(vh) + tc.adam_eps);
      }
      EXPECT_NEAR(got[t].second->data()[i], x, 1e-14);
    }
  }
}

TEST(Train, MemorizesOnePositive) {
  std::mt19937_64 rng(2);
  const ModelConfig c = testing::small_config(2);
  std::vector<TrainExample> one = {{testing::random_pair(rng, 8), 1, "q0", "db0"}};
  TrainConfig tc;
  tc.epochs = 50;
  tc.learning_rate = 5e-2;
  const TrainResult r = train(one, one, init_parameters(c), tc);
  ASSERT_EQ(r.total_steps, 50);
  ASSERT_EQ(r.log.size(), 50u);
  // The first update runs at warmup factor 0 and leaves the parameters alone.
  EXPECT_EQ(r.log[0].loss, r.log[1].loss);
  for (std::size_t i = 2; i < r.log.size(); ++i) EXPECT_LT(r.log[i].loss, r.log[i - 1].loss) << "epoch " << i + 1;
  EXPECT_LT(r.log.back().loss, 0.1);
}

TEST(Train, SeededRunsAreBitIdentical) {
  std::mt19937_64 rng(3);
  ModelConfig c = testing::small_config(3);
  c.dropout_rate = 0.1;
  const auto data = random_examples(rng, 12, 3);
  const auto dev = random_examples(rng, 4, 3);
  TrainConfig tc;
  tc.epochs = 3;
  tc.batch_beams = 4;
  tc.learning_rate = 1e-3;
  tc.seed = 9;
  const Parameters init = init_parameters(c);
  std::ostringstream log_a, log_b;
  const TrainResult a = train(data, dev, init, tc, &log_a);
  const TrainResult b = train(data, dev, init, tc, &log_b);
  EXPECT_EQ(a.best.checksum(), b.best.checksum());
  EXPECT_EQ(log_a.str(), log_b.str());
  tc.seed = 10;
  const TrainResult other = train(data, dev, init, tc);
  EXPECT_NE(a.best.checksum(), other.best.checksum());
}

TEST(Train, StepsLogAndBestCheckpoint) {
  std::mt19937_64 rng(4);
  const ModelConfig c = testing::small_config(4);
  const auto data = random_examples(rng, 10, 2);
  const auto dev = random_examples(rng, 6, 2);
  TrainConfig tc;
  tc.epochs = 6;
  tc.batch_beams = 4;
  tc.learning_rate = 2e-2;
  std::ostringstream csv;
  const TrainResult r = train(data, dev, init_parameters(c), tc, &csv);
  EXPECT_EQ(r.total_steps, 3 * 6);
  EXPECT_EQ(r.log.back().step, 18);

  std::istringstream lines(csv.str());
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, "epoch,step,loss,dev_acc,dev_auc");
  int rows = 0;
  while (std::getline(lines, line)) ++rows;
  EXPECT_EQ(rows, 6);

  int expected = 0;
  for (std::size_t i = 0; i < r.log.size(); ++i) {
    if (r.log[i].dev_accuracy > r.log[static_cast<std::size_t>(expected)].dev_accuracy) expected = static_cast<int>(i);
  }
  EXPECT_EQ(r.best_epoch, expected + 1);
  const auto scores = predict(r.best, dev);
  std::size_t right = 0;
  for (std::size_t i = 0; i < dev.size(); ++i) right += ((scores[i] >= 0.5) == (dev[i].label == 1)) ? 1 : 0;
  EXPECT_EQ(static_cast<double>(right) / static_cast<double>(dev.size()), r.best_dev_accuracy);
}

TEST(Train, Errors) {
  const Parameters init = init_parameters(testing::small_config(5));
  EXPECT_THROW(train({}, {}, init, TrainConfig{}), EmptyDataset);
  std::mt19937_64 rng(5);
  const auto data = random_examples(rng, 1, 1);
  TrainConfig bad;
  bad.batch_beams = 0;
  EXPECT_THROW(train(data, {}, init, bad), ConfigError);
}

TEST(Predict, IndependentOfGroupingAndWorkers) {
  std::mt19937_64 rng(6);
  const Parameters p = testing::busy_parameters(testing::small_config(6), rng);
  std::vector<PairInput> pairs;
  for (int i = 0; i < 17; ++i) pairs.push_back(testing::random_pair(rng));
  pairs.push_back(pairs[3]);
  const auto all = predict(p, pairs);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    EXPECT_EQ(all[i], predict(p, std::vector<PairInput>{pairs[i]})[0]);
    EXPECT_GT(all[i], 0.0);
    EXPECT_LT(all[i], 1.0);
  }
  EXPECT_EQ(all[3], all.back());
  EXPECT_EQ(predict(p, pairs, 3), all);

  std::vector<std::size_t> order(pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<PairInput> shuffled;
  for (std::size_t i : order) shuffled.push_back(pairs[i]);
  const auto s = predict(p, shuffled, 2);
  for (std::size_t i = 0; i < order.size(); ++i) EXPECT_EQ(s[i], all[order[i]]);
}

}  // namespace
}  // namespace sqled
