#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "sqled/model.h"

namespace sqled {

struct TrainConfig {
  int batch_beams = 16;
  int epochs = 20;
  double learning_rate = 3e-5;
  double warmup_fraction = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 0.01;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainExample {
  PairInput input;
  int label = 0;
  std::string beam_id;
  std::string db_id;
};

// Multiplier on the base rate: linear warmup from 0, then linear decay to 0.
double schedule_factor(int step, int total_steps, int warmup_steps);
int warmup_steps_for(int total_steps, double warmup_fraction);

// Decoupled weight decay with bias-corrected adaptive moments.
class AdamW {
 public:
  AdamW(const Parameters& shape, const TrainConfig& config);
  void step(Parameters& params, const Parameters& grad, double lr);
  int steps_taken() const { return t_; }

 private:
  TrainConfig config_;
  Parameters m_, v_;
  int t_ = 0;
};

struct EpochLog {
  int epoch = 0;
  int step = 0;
  double loss = 0.0;
  double dev_accuracy = 0.0;
  double dev_auc = 0.0;  // NaN when the dev split has one class
};

struct TrainResult {
  Parameters best;
  int best_epoch = 0;
  double best_dev_accuracy = -1.0;
  std::vector<EpochLog> log;
  int total_steps = 0;
};

// Each step consumes every example of K shuffled beams. The checkpoint with
// the highest dev accuracy (threshold 0.5) is returned; ties keep the earlier
// epoch. Throws EmptyDataset.
TrainResult train(const std::vector<TrainExample>& train_set, const std::vector<TrainExample>& dev_set,
                  const Parameters& init, const TrainConfig& config, std::ostream* csv_log = nullptr);

// Pure inference, optionally sharded across worker threads.
std::vector<double> predict(const Parameters& params, const std::vector<PairInput>& pairs, int workers = 1);
std::vector<double> predict(const Parameters& params, const std::vector<TrainExample>& examples, int workers = 1);

}  // namespace sqled
