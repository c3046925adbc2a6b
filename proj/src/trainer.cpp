#include "trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

#include "errors.hpp"
#include "numeric.hpp"

namespace miplkit {

Variant parse_variant(const std::string& name) {
  if (name == "full") return Variant::kFull;
  if (name == "no_att") return Variant::kNoAtt;
  if (name == "pro") return Variant::kPro;
  if (name == "avg") return Variant::kAvg;
  if (name == "pll_mean") return Variant::kPllMean;
  if (name == "pll_maxmin") return Variant::kPllMaxMin;
  fail(ErrorCode::kInvalidArgument,
       "unknown variant '" + name +
           "' (expected full|no_att|pro|avg|pll_mean|pll_maxmin)");
}

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::kFull: return "full";
    case Variant::kNoAtt: return "no_att";
    case Variant::kPro: return "pro";
    case Variant::kAvg: return "avg";
    case Variant::kPllMean: return "pll_mean";
    case Variant::kPllMaxMin: return "pll_maxmin";
  }
  fail(ErrorCode::kInvalidArgument, "bad variant enum value");
}

void sgd_step(ModelParams& params, ModelParams& grads, ModelParams& velocity,
              double lr, double momentum, double weight_decay) {
  auto pb = param_blocks(params);
  auto gb = param_blocks(grads);
  auto vb = param_blocks(velocity);
  for (std::size_t b = 0; b < pb.size(); ++b) {
    for (std::size_t part = 0; part < pb[b].parts.size(); ++part) {
      auto p = pb[b].parts[part];
      auto g = gb[b].parts[part];
      auto v = vb[b].parts[part];
      if (p.size() != g.size() || p.size() != v.size()) {
        fail(ErrorCode::kInvalidArgument,
             std::string("sgd_step: shape mismatch in block ") + pb[b].name);
      }
      if (!all_finite(g)) {
        fail(ErrorCode::kNumeric,
             std::string("sgd_step: non-finite gradient in block ") + pb[b].name);
      }
      for (std::size_t i = 0; i < p.size(); ++i) {
        v[i] = momentum * v[i] + g[i] + weight_decay * p[i];
        p[i] -= lr * v[i];
      }
    }
  }
}

namespace {

void validate_train_config(const TrainConfig& cfg) {
  if (!(cfg.lr_max > 0.0)) fail(ErrorCode::kInvalidArgument, "lr_max must be > 0");
  if (!(cfg.lr_min >= 0.0 && cfg.lr_min <= cfg.lr_max)) {
    fail(ErrorCode::kInvalidArgument, "lr_min must lie in [0, lr_max]");
  }
  if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0)) {
    fail(ErrorCode::kInvalidArgument, "momentum must lie in [0, 1)");
  }
  if (!(cfg.weight_decay >= 0.0)) {
    fail(ErrorCode::kInvalidArgument, "weight_decay must be >= 0");
  }
  if (cfg.epochs < 1) fail(ErrorCode::kInvalidArgument, "epochs must be >= 1");
  if (cfg.batch_size < 1) fail(ErrorCode::kInvalidArgument, "batch_size must be >= 1");
  if (!(cfg.attention_loss_weight >= 0.0)) {
    fail(ErrorCode::kInvalidArgument, "attention loss weight must be >= 0");
  }
  if (cfg.extractor == Extractor::kMlp && cfg.hidden_dim < 1) {
    fail(ErrorCode::kInvalidArgument, "hidden_dim must be >= 1 for the mlp extractor");
  }
}

BagReduction variant_reduction(Variant v) {
  switch (v) {
    case Variant::kPllMean: return BagReduction::kMean;
    case Variant::kPllMaxMin: return BagReduction::kMaxMin;
    default: return BagReduction::kNone;
  }
}

// lambda for epoch t (1-based) under the variant's schedule
double variant_lambda(Variant v, int t, int total) {
  switch (v) {
    case Variant::kAvg: return 1.0;
    case Variant::kPro:
    case Variant::kPllMean:
    case Variant::kPllMaxMin: return 0.0;
    default: return momentum_lambda(t, total);
  }
}

}  // namespace

TrainResult train(const MiplDataset& train_ds, const MiplDataset* test_ds,
                  const TrainConfig& cfg, const TrainHooks& hooks) {
  validate_train_config(cfg);
  if (train_ds.size() == 0) {
    fail(ErrorCode::kInvalidArgument, "train: empty dataset");
  }
  if (train_ds.num_classes < 2) {
    fail(ErrorCode::kInvalidArgument, "train: need at least 2 classes");
  }
  for (std::size_t i = 0; i < train_ds.size(); ++i) {
    const Bag& bag = train_ds.bags[i];
    if (bag.size() == 0) {
      fail(ErrorCode::kInvalidArgument,
           "train: bag " + std::to_string(i) + " is empty");
    }
    if (bag.instances.cols() != static_cast<std::size_t>(train_ds.dim)) {
      fail(ErrorCode::kInvalidArgument,
           "train: bag " + std::to_string(i) + " dimension mismatch");
    }
  }

  BagReduction reduction = variant_reduction(cfg.variant);
  int input_dim = reduction == BagReduction::kMaxMin ? 2 * train_ds.dim
                                                     : train_ds.dim;
  bool use_attention_loss = cfg.variant == Variant::kFull ||
                            cfg.variant == Variant::kPro ||
                            cfg.variant == Variant::kAvg;
  double att_weight = use_attention_loss ? cfg.attention_loss_weight : 0.0;

  Rng rng(cfg.seed);
  ModelParams model = init_params(input_dim, cfg.hidden_dim,
                                  train_ds.num_classes, cfg.extractor,
                                  reduction, rng);
  ModelParams velocity = zeros_like(model);

  Matrix weights = init_weights(train_ds);
  if (hooks.on_weights) hooks.on_weights(0, weights);

  std::vector<std::size_t> order(train_ds.size());
  std::iota(order.begin(), order.end(), 0);

  TrainResult res;
  res.history.reserve(static_cast<std::size_t>(cfg.epochs));

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    double lr = cosine_lr(epoch - 1, cfg.epochs, cfg.lr_max, cfg.lr_min);
    double lambda = variant_lambda(cfg.variant, epoch, cfg.epochs);
    rng.shuffle(order);

    double sum_lm = 0.0, sum_la = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      std::size_t stop = std::min(order.size(),
                                  start + static_cast<std::size_t>(cfg.batch_size));
      std::size_t batch = stop - start;
      double inv_batch = 1.0 / static_cast<double>(batch);

      std::vector<ForwardTrace> traces(batch);
      for (std::size_t b = 0; b < batch; ++b) {
        traces[b] = forward(model, train_ds.bags[order[start + b]]);
      }

      // disambiguation weights move first, then the loss reads them
      for (std::size_t b = 0; b < batch; ++b) {
        std::size_t bag_idx = order[start + b];
        const Bag& bag = train_ds.bags[bag_idx];
        auto row = weights.row(bag_idx);
        Vec w_prev(row.begin(), row.end());
        Vec w_new = update_weights(w_prev, traces[b].probs, bag.candidates, lambda);
        if (hooks.on_weight_update) {
          hooks.on_weight_update(epoch, bag_idx, traces[b].probs, w_new);
        }
        std::copy(w_new.begin(), w_new.end(), row.begin());
      }
      if (hooks.on_weights) hooks.on_weights(epoch, weights);

      std::vector<Vec> attn_grads;
      if (att_weight > 0.0) {
        std::vector<Vec> scores(batch);
        for (std::size_t b = 0; b < batch; ++b) scores[b] = traces[b].attn;
        AttentionLossResult att = attention_loss(scores);
        sum_la += att.loss * static_cast<double>(batch);
        attn_grads = std::move(att.grads);
        for (Vec& g : attn_grads) {
          for (double& v : g) v *= att_weight;
        }
      }

      ModelParams batch_grads = zeros_like(model);
      auto acc_blocks = param_blocks(batch_grads);
      for (std::size_t b = 0; b < batch; ++b) {
        std::size_t bag_idx = order[start + b];
        const Bag& bag = train_ds.bags[bag_idx];
        auto row = weights.row(bag_idx);
        Vec w(row.begin(), row.end());
        BagLossResult dis = disambiguation_loss(w, traces[b].probs, bag.candidates);
        sum_lm += dis.loss;
        for (double& g : dis.grad_probs) g *= inv_batch;
        ModelParams bag_grads =
            backward(model, traces[b], dis.grad_probs,
                     att_weight > 0.0 ? attn_grads[b] : Vec{});
        auto bag_blocks = param_blocks(bag_grads);
        for (std::size_t blk = 0; blk < acc_blocks.size(); ++blk) {
          for (std::size_t part = 0; part < acc_blocks[blk].parts.size(); ++part) {
            axpy(1.0, bag_blocks[blk].parts[part], acc_blocks[blk].parts[part]);
          }
        }
      }

      sgd_step(model, batch_grads, velocity, lr, cfg.momentum, cfg.weight_decay);
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.lr = lr;
    stats.loss_m = sum_lm / static_cast<double>(train_ds.size());
    stats.loss_a = sum_la / static_cast<double>(train_ds.size());
    stats.loss_total = total_loss(stats.loss_m, stats.loss_a, att_weight);
    stats.train_acc = evaluate(model, train_ds);
    if (test_ds != nullptr) {
      stats.test_acc = evaluate(model, *test_ds);
      stats.has_test_acc = true;
    }
    if (hooks.on_epoch) hooks.on_epoch(stats);
    res.history.push_back(stats);
  }

  res.model = std::move(model);
  return res;
}

double evaluate(const ModelParams& params, const MiplDataset& ds) {
  if (ds.size() == 0) fail(ErrorCode::kInvalidArgument, "evaluate: empty dataset");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds.bags[i].truth < 0) {
      fail(ErrorCode::kInvalidArgument,
           "evaluate: bag " + std::to_string(i) + " has no truth label");
    }
    if (predict(params, ds.bags[i]) == ds.bags[i].truth) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(ds.size());
}

ExperimentResult run_experiment(const MiplDataset& ds, const TrainConfig& cfg,
                                int n_runs, double ratio, int threads) {
  if (n_runs < 1) fail(ErrorCode::kInvalidArgument, "run_experiment: n_runs must be >= 1");

  // per-run seeds come off the master stream up front, in run order, so the
  // schedule is independent of how runs are distributed over threads
  struct RunSeed {
    std::uint64_t split_seed;
    std::uint64_t train_seed;
  };
  Rng master(cfg.seed);
  std::vector<RunSeed> seeds(static_cast<std::size_t>(n_runs));
  for (RunSeed& s : seeds) {
    s.split_seed = master.next_u64();
    s.train_seed = master.next_u64();
  }

  std::vector<double> accs(static_cast<std::size_t>(n_runs), 0.0);
  std::vector<std::string> errors(static_cast<std::size_t>(n_runs));
  auto run_one = [&](std::size_t i) {
    try {
      Rng split_rng(seeds[i].split_seed);
      auto [train_part, test_part] = split(ds, ratio, split_rng);
      TrainConfig run_cfg = cfg;
      run_cfg.seed = seeds[i].train_seed;
      TrainResult tr = train(train_part, nullptr, run_cfg);
      accs[i] = evaluate(tr.model, test_part);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  };

  std::size_t workers = threads <= 0 ? 1 : static_cast<std::size_t>(threads);
  workers = std::min(workers, accs.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < accs.size(); ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) {
      pool.emplace_back([&] {
        for (;;) {
          std::size_t i = next.fetch_add(1);
          if (i >= accs.size()) return;
          run_one(i);
        }
      });
    }
    for (std::thread& t : pool) t.join();
  }
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i].empty()) {
      fail(ErrorCode::kNumeric,
           "run " + std::to_string(i) + " failed: " + errors[i]);
    }
  }

  ExperimentResult res;
  res.run_accs = accs;
  for (double a : accs) res.mean_acc += a;
  res.mean_acc /= static_cast<double>(n_runs);
  if (n_runs > 1) {
    double ss = 0.0;
    for (double a : accs) {
      double d = a - res.mean_acc;
      ss += d * d;
    }
    res.std_acc = std::sqrt(ss / static_cast<double>(n_runs - 1));
  }
  return res;
}

}  // namespace miplkit
