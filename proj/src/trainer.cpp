#include "contactnet/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <map>
#include <numbers>
#include <ostream>
#include <set>

namespace contactnet {

int TrainConfig::positives_per_batch() const {
  double p = batch_size * positive_fraction;
  return static_cast<int>(std::lround(p));
}

void TrainConfig::validate() const {
  if (positive_fraction <= 0.0 || positive_fraction >= 1.0)
    throw std::invalid_argument("train config: positive_fraction must be in (0,1)");
  double p = batch_size * positive_fraction;
  if (std::abs(p - std::lround(p)) > 1e-9)
    throw std::invalid_argument(
        "train config: batch_size * positive_fraction must be integral");
  if (batch_size < 2 || epochs < 1 || batches_per_epoch < 1)
    throw std::invalid_argument("train config: counts must be positive");
}

OptimizerState OptimizerState::zeros_like(const ModelWeights& w) {
  OptimizerState s;
  for (const NamedTensor& t : w.tensors) {
    s.m.push_back(Tensor<double>::zeros(t.value.shape));
    s.v.push_back(Tensor<double>::zeros(t.value.shape));
  }
  return s;
}

double bce_loss(const std::vector<double>& logits, const std::vector<double>& labels) {
  if (logits.empty() || logits.size() != labels.size())
    throw std::invalid_argument("bce_loss: length mismatch");
  double total = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    double z = logits[i], y = labels[i];
    total += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
  }
  return total / logits.size();
}

void adamw_step(ModelWeights& weights, const std::vector<Tensor<double>>& grads,
                OptimizerState& state, double lr, double beta1, double beta2,
                double eps, double weight_decay) {
  if (grads.size() != weights.tensors.size())
    throw std::invalid_argument("adamw_step: grads/weights mismatch");
  ++state.step;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  for (size_t p = 0; p < weights.tensors.size(); ++p) {
    NamedTensor& t = weights.tensors[p];
    const Tensor<double>& g = grads[p];
    if (g.shape != t.value.shape)
      throw std::invalid_argument("adamw_step: gradient shape mismatch for " + t.name);
    const double decay = t.decay ? weight_decay : 0.0;
    for (int64_t i = 0; i < t.value.size(); ++i) {
      double& theta = t.value.data[i];
      if (decay != 0.0) theta -= lr * decay * theta;
      double& m = state.m[p].data[i];
      double& v = state.v[p].data[i];
      double gi = g.data[i];
      m = beta1 * m + (1.0 - beta1) * gi;
      v = beta2 * v + (1.0 - beta2) * gi * gi;
      theta -= lr * (m / bc1) / (std::sqrt(v / bc2) + eps);
    }
  }
}

double cosine_lr(int64_t step, int64_t total_steps, double lr0, double lr_floor) {
  if (step < 0 || step > total_steps)
    throw std::invalid_argument("cosine_lr: step outside [0, total]");
  double phase = total_steps > 0 ? static_cast<double>(step) / total_steps : 1.0;
  return lr_floor + (lr0 - lr_floor) * (1.0 + std::cos(std::numbers::pi * phase)) / 2.0;
}

namespace {

// Greedy case spreading: never reuse a case until all candidates were used.
const LabeledDecoy* draw_spread(const std::vector<const LabeledDecoy*>& pool,
                                const std::map<std::string, std::vector<const LabeledDecoy*>>& by_case,
                                std::set<std::string>& used, std::mt19937_64& rng) {
  std::vector<const std::string*> fresh;
  for (const auto& [cid, members] : by_case)
    if (!used.count(cid)) fresh.push_back(&cid);
  if (fresh.empty()) {
    // all cases consumed; draw uniformly from the whole pool
    std::uniform_int_distribution<size_t> pick(0, pool.size() - 1);
    return pool[pick(rng)];
  }
  std::uniform_int_distribution<size_t> pick_case(0, fresh.size() - 1);
  const std::string& cid = *fresh[pick_case(rng)];
  used.insert(cid);
  const auto& members = by_case.at(cid);
  std::uniform_int_distribution<size_t> pick_member(0, members.size() - 1);
  return members[pick_member(rng)];
}

}  // namespace

std::vector<const LabeledDecoy*> sample_batch(const std::vector<LabeledDecoy>& dataset,
                                              const TrainConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  const int n_pos = cfg.positives_per_batch();
  const int n_neg = cfg.batch_size - n_pos;

  std::vector<const LabeledDecoy*> pos_pool, neg_pool;
  std::map<std::string, std::vector<const LabeledDecoy*>> pos_by_case, neg_by_case;
  for (const LabeledDecoy& d : dataset) {
    if (d.positive) {
      pos_pool.push_back(&d);
      pos_by_case[d.case_id].push_back(&d);
    } else {
      neg_pool.push_back(&d);
      neg_by_case[d.case_id].push_back(&d);
    }
  }
  if (static_cast<int>(pos_pool.size()) < n_pos ||
      static_cast<int>(neg_pool.size()) < n_neg)
    throw std::invalid_argument(
        "sample_batch: dataset too small (" + std::to_string(pos_pool.size()) +
        " positives, " + std::to_string(neg_pool.size()) + " negatives; need " +
        std::to_string(n_pos) + "/" + std::to_string(n_neg) + ")");

  std::set<std::string> used;
  std::vector<const LabeledDecoy*> batch;
  for (int i = 0; i < n_pos; ++i)
    batch.push_back(draw_spread(pos_pool, pos_by_case, used, rng));
  for (int i = 0; i < n_neg; ++i)
    batch.push_back(draw_spread(neg_pool, neg_by_case, used, rng));
  return batch;
}

std::vector<RankedDecoy> assemble_case_decoys(std::vector<RankedDecoy> ranked,
                                              size_t top_scoring, size_t max_positives) {
  std::stable_sort(ranked.begin(), ranked.end(), [](const RankedDecoy& a, const RankedDecoy& b) {
    if (a.external_score != b.external_score) return a.external_score > b.external_score;
    return a.decoy_id < b.decoy_id;
  });
  std::vector<RankedDecoy> subset(ranked.begin(),
                                  ranked.begin() + std::min(top_scoring, ranked.size()));
  size_t extra = 0;
  for (size_t i = subset.size(); i < ranked.size() && extra < max_positives; ++i) {
    if (ranked[i].positive) {
      subset.push_back(ranked[i]);
      ++extra;
    }
  }
  // cap positives taken from below the cut, not the ones already inside it
  return subset;
}

TrainResult train(const std::vector<LabeledDecoy>& dataset, const TrainConfig& cfg,
                  const HyperParams& hp, const std::function<bool(const StepStats&)>& on_step) {
  cfg.validate();
  TrainResult result;
  result.weights = init_weights(hp, cfg.seed);
  OptimizerState state = OptimizerState::zeros_like(result.weights);
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);

  const int64_t total_steps = static_cast<int64_t>(cfg.epochs) * cfg.batches_per_epoch;
  const size_t n_params = result.weights.tensors.size();

  std::string last_checkpoint;
  bool stop = false;

  for (int epoch = 0; epoch < cfg.epochs && !stop; ++epoch) {
    auto epoch_start = std::chrono::steady_clock::now();
    double loss_sum = 0.0;
    int64_t correct = 0, seen = 0;
    double lr = cfg.lr0;
    int batches_done = 0;

    for (int batch_i = 0; batch_i < cfg.batches_per_epoch && !stop; ++batch_i) {
      int64_t step = static_cast<int64_t>(epoch) * cfg.batches_per_epoch + batch_i;
      // denominator total-1 puts the last executed step exactly on lr_floor
      lr = cosine_lr(step, std::max<int64_t>(total_steps - 1, 1), cfg.lr0, cfg.lr_floor);

      std::vector<const LabeledDecoy*> batch = sample_batch(dataset, cfg, rng);

      Tape<double> tape;
      TapeWeights<double> tw = register_weights(tape, result.weights, true);
      std::vector<int> loss_ids;
      double fixed_loss = 0.0;  // no-contact samples: score 0, no gradient
      int batch_correct = 0;

      for (const LabeledDecoy* d : batch) {
        ForwardResult<double> fwd = forward_complex(tape, tw, hp, *d->rec_features,
                                                    *d->rec_ca, *d->lig_features, d->lig_ca);
        double label = d->positive ? 1.0 : 0.0;
        if (fwd.no_contact) {
          fixed_loss += bce_loss({-30.0}, {label});
          if (!d->positive) ++batch_correct;
          continue;
        }
        loss_ids.push_back(tape.bce_with_logits(fwd.logit_id,
                                                Tensor<double>::scalar(label)));
        double logit = tape.value(fwd.logit_id).data[0];
        if ((logit >= 0.0) == d->positive) ++batch_correct;
      }

      double batch_loss;
      if (!loss_ids.empty()) {
        int total = loss_ids[0];
        for (size_t i = 1; i < loss_ids.size(); ++i) total = tape.add(total, loss_ids[i]);
        int mean = tape.scale(total, 1.0 / cfg.batch_size);
        batch_loss = tape.value(mean).data[0] + fixed_loss / cfg.batch_size;
        tape.backward(mean);
      } else {
        batch_loss = fixed_loss / cfg.batch_size;
      }

      if (!std::isfinite(batch_loss)) {
        result.aborted_nan = true;
        result.last_checkpoint = last_checkpoint;
        result.steps_run = step;
        return result;
      }

      if (!loss_ids.empty()) {
        std::vector<Tensor<double>> grads;
        grads.reserve(n_params);
        for (const NamedTensor& t : result.weights.tensors)
          grads.push_back(tape.grad(tw.at(t.name)));
        adamw_step(result.weights, grads, state, lr, 0.9, 0.999, 1e-8, cfg.weight_decay);
      }

      loss_sum += batch_loss;
      correct += batch_correct;
      seen += cfg.batch_size;
      ++batches_done;
      result.steps_run = step + 1;

      if (on_step) {
        StepStats ss{step, batch_loss,
                     static_cast<double>(batch_correct) / cfg.batch_size, lr};
        if (!on_step(ss)) stop = true;
      }
    }

    auto epoch_end = std::chrono::steady_clock::now();
    EpochStats es;
    es.epoch = epoch;
    es.mean_loss = batches_done > 0 ? loss_sum / batches_done : 0.0;
    es.train_accuracy = seen > 0 ? static_cast<double>(correct) / seen : 0.0;
    es.lr = lr;
    es.wall_seconds = std::chrono::duration<double>(epoch_end - epoch_start).count();
    result.history.push_back(es);

    if (!cfg.checkpoint_dir.empty()) {
      std::filesystem::create_directories(cfg.checkpoint_dir);
      std::string path = cfg.checkpoint_dir + "/epoch_" + std::to_string(epoch) + ".cnwt";
      save_weights(result.weights, path);
      last_checkpoint = path;
    }
  }
  result.last_checkpoint = last_checkpoint;
  return result;
}

void write_history_csv(const std::vector<EpochStats>& history, std::ostream& out) {
  out << "epoch,mean_loss,train_acc,lr,wall_seconds\n";
  char buf[160];
  for (const EpochStats& e : history) {
    std::snprintf(buf, sizeof(buf), "%d,%.10g,%.6g,%.10g,%.3f\n", e.epoch, e.mean_loss,
                  e.train_accuracy, e.lr, e.wall_seconds);
    out << buf;
  }
}

}  // namespace contactnet
