#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "contactnet/network.hpp"

namespace contactnet {

struct TrainConfig {
  double lr0 = 1e-4;
  double lr_floor = 1e-6;  // lr0 / 100: "decays 100 times"
  double weight_decay = 5e-3;
  int batch_size = 52;
  double positive_fraction = 0.25;  // 13 of 52
  int batches_per_epoch = 2000;
  int epochs = 160;
  uint64_t seed = 0;
  std::string checkpoint_dir;  // empty disables checkpoints

  int positives_per_batch() const;
  void validate() const;
};

// One decoy with its label. Labels come from the assessment module
// (acceptable or better = positive), never set by hand.
struct LabeledDecoy {
  std::string case_id;
  std::string decoy_id;
  const ResidueFeatures* rec_features = nullptr;
  const std::vector<Vec3>* rec_ca = nullptr;
  const ResidueFeatures* lig_features = nullptr;
  std::vector<Vec3> lig_ca;  // pose-specific ligand coordinates
  bool positive = false;
};

struct OptimizerState {
  std::vector<Tensor<double>> m;  // first moments, manifest order
  std::vector<Tensor<double>> v;  // second moments
  int64_t step = 0;

  static OptimizerState zeros_like(const ModelWeights& w);
};

// Stable binary cross-entropy on raw logits, mean over the batch.
double bce_loss(const std::vector<double>& logits, const std::vector<double>& labels);

// Adam with decoupled weight decay; decay applied as theta *= (1 - lr*wd)
// before the moment update term. Tensors flagged decay=false (biases,
// layer-norm affine) are not decayed.
void adamw_step(ModelWeights& weights, const std::vector<Tensor<double>>& grads,
                OptimizerState& state, double lr, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8, double weight_decay = 0.0);

// lr_floor + (lr0 - lr_floor) * (1 + cos(pi * step / total)) / 2
double cosine_lr(int64_t step, int64_t total_steps, double lr0, double lr_floor);

// Balanced batch: 13 positives + 39 negatives at the default 52/0.25,
// drawn uniformly with replacement across cases, greedily avoiding case
// repeats until every case has been used.
std::vector<const LabeledDecoy*> sample_batch(const std::vector<LabeledDecoy>& dataset,
                                              const TrainConfig& cfg, std::mt19937_64& rng);

// Appendix-style per-case subset: the top `top_scoring` decoys by external
// score plus up to `max_positives` positives regardless of rank.
struct RankedDecoy {
  std::string decoy_id;
  double external_score;  // higher is better
  bool positive;
};
std::vector<RankedDecoy> assemble_case_decoys(std::vector<RankedDecoy> ranked,
                                              size_t top_scoring = 2500,
                                              size_t max_positives = 50);

struct EpochStats {
  int epoch;
  double mean_loss;
  double train_accuracy;
  double lr;
  double wall_seconds;
};

struct TrainResult {
  ModelWeights weights;
  std::vector<EpochStats> history;
  bool aborted_nan = false;
  std::string last_checkpoint;  // last good checkpoint path when aborted
  int64_t steps_run = 0;
};

struct StepStats {
  int64_t step;
  double loss;
  double batch_accuracy;
  double lr;
};

// Full loop: forward -> bce -> backward -> adamw with the cosine schedule.
// `on_step` (optional) observes every step and may stop training early by
// returning false.
TrainResult train(const std::vector<LabeledDecoy>& dataset, const TrainConfig& cfg,
                  const HyperParams& hp,
                  const std::function<bool(const StepStats&)>& on_step = nullptr);

void write_history_csv(const std::vector<EpochStats>& history, std::ostream& out);

}  // namespace contactnet
