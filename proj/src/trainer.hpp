#ifndef MIPLKIT_TRAINER_HPP
#define MIPLKIT_TRAINER_HPP

// The training loop: epoch shuffling, mini-batches, the per-batch candidate
// weight update, SGD with momentum + weight decay, cosine-annealed learning
// rate, variant selection, evaluation, and the multi-seed split protocol.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "losses.hpp"
#include "matrix.hpp"
#include "model.hpp"

namespace miplkit {

// full      - momentum schedule lambda(t) = (T-t)/T plus attention loss
// no_att    - attention loss weight forced to 0
// pro       - lambda forced to 0 (progressive rule)
// avg       - lambda forced to 1 (weights stay at initialization)
// pll_mean / pll_maxmin - bags reduced to single vectors, progressive rule,
//                         no attention loss
enum class Variant { kFull, kNoAtt, kPro, kAvg, kPllMean, kPllMaxMin };

Variant parse_variant(const std::string& name);
std::string variant_name(Variant v);

struct TrainConfig {
  double lr_max = 0.05;
  double lr_min = 0.0;
  double momentum = 0.9;
  double weight_decay = 0.0001;
  int epochs = 50;
  int batch_size = 1;
  double attention_loss_weight = 0.001;
  std::uint64_t seed = 1;
  Variant variant = Variant::kFull;
  Extractor extractor = Extractor::kIdentity;
  int hidden_dim = 32;  // feature dim for the mlp extractor
};

struct EpochStats {
  int epoch = 0;  // 1-based
  double lr = 0.0;
  double loss_total = 0.0;
  double loss_m = 0.0;
  double loss_a = 0.0;
  double train_acc = 0.0;
  double test_acc = 0.0;
  bool has_test_acc = false;
};

struct TrainHooks {
  // after weight init (epoch 0) and after every batch's weight updates
  std::function<void(int epoch, const Matrix& weights)> on_weights;
  // one call per updated row, with the probabilities that drove the update
  std::function<void(int epoch, std::size_t bag_index, const Vec& probs,
                     const Vec& w_new)>
      on_weight_update;
  std::function<void(const EpochStats&)> on_epoch;
};

struct TrainResult {
  ModelParams model;
  std::vector<EpochStats> history;
};

// One momentum-SGD update over every parameter block:
//   v <- momentum * v + grad + weight_decay * param;  param <- param - lr * v
// Aborts with a kNumeric error naming the block if a gradient is not finite.
void sgd_step(ModelParams& params, ModelParams& grads, ModelParams& velocity,
              double lr, double momentum, double weight_decay);

// Algorithm: init weights uniformly over candidates; each epoch shuffle the
// bags, and per batch: forward, update the batch's weight rows with the
// epoch's lambda, compute the batch-mean loss, backprop, step. The learning
// rate for epoch e (1-based) is cosine_lr(e-1, epochs), so epoch 1 runs at
// lr_max. test_ds may be null (history then has no test accuracy).
TrainResult train(const MiplDataset& train_ds, const MiplDataset* test_ds,
                  const TrainConfig& cfg, const TrainHooks& hooks = {});

// Fraction of bags whose prediction matches truth; every bag must carry truth.
double evaluate(const ModelParams& params, const MiplDataset& ds);

struct ExperimentResult {
  double mean_acc = 0.0;
  double std_acc = 0.0;  // sample standard deviation, 0 for a single run
  std::vector<double> run_accs;
};

// n_runs times: draw a fresh split seed and train seed from a master rng
// seeded with cfg.seed, split at `ratio`, train, evaluate on the held-out
// side. Seeds are pre-drawn in run order and results aggregate in run order,
// so the outcome is byte-identical for any thread count (0 = serial).
ExperimentResult run_experiment(const MiplDataset& ds, const TrainConfig& cfg,
                                int n_runs, double ratio, int threads = 0);

}  // namespace miplkit

#endif  // MIPLKIT_TRAINER_HPP
