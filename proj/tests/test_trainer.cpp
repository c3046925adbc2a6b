#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "doctest.h"
#include "errors.hpp"
#include "losses.hpp"
#include "matrix.hpp"
#include "model.hpp"
#include "numeric.hpp"
#include "rng.hpp"
#include "trainer.hpp"

using namespace miplkit;

namespace {

SynthConfig tiny_synth() {
  SynthConfig cfg;
  cfg.num_classes = 3;
  cfg.num_distractors = 1;
  cfg.false_positives = 1;
  cfg.bags_per_class = 4;
  cfg.min_instances = 3;
  cfg.max_instances = 6;
  cfg.cluster_separation = 6.0;
  cfg.dim = 4;
  cfg.seed = 77;
  return cfg;
}

TrainConfig tiny_train() {
  TrainConfig cfg;
  cfg.epochs = 6;
  cfg.seed = 5;
  return cfg;
}

// identity model that ignores attention shape and scores by the first two dims
ModelParams axis_model() {
  Rng rng(1);
  ModelParams p = init_params(2, 2, 2, Extractor::kIdentity,
                              BagReduction::kNone, rng);
  for (auto& block : param_blocks(p)) {
    for (auto part : block.parts) {
      for (double& v : part) v = 0.0;
    }
  }
  p.class_weight.at(0, 0) = 1.0;
  p.class_weight.at(1, 1) = 1.0;
  return p;
}

Bag point_bag(double x, double y, int truth) {
  Bag b;
  b.instances = Matrix(1, 2);
  b.instances.at(0, 0) = x;
  b.instances.at(0, 1) = y;
  b.candidates = {0, 1};
  b.truth = truth;
  return b;
}

}  // namespace

TEST_CASE("variant names round-trip through the parser") {
  for (Variant v : {Variant::kFull, Variant::kNoAtt, Variant::kPro,
                    Variant::kAvg, Variant::kPllMean, Variant::kPllMaxMin}) {
    CHECK(parse_variant(variant_name(v)) == v);
  }
  CHECK(variant_name(Variant::kFull) == "full");
  CHECK(variant_name(Variant::kPllMaxMin) == "pll_maxmin");
  CHECK_THROWS_AS(parse_variant("bogus"), Error);
}

TEST_CASE("sgd_step follows the frozen momentum/decay oracle") {
  // one live parameter playing f(p) = p^2, so grad = 2p
  Rng rng(1);
  ModelParams p = init_params(2, 2, 2, Extractor::kIdentity,
                              BagReduction::kNone, rng);
  for (auto& block : param_blocks(p)) {
    for (auto part : block.parts) {
      for (double& v : part) v = 0.0;
    }
  }
  p.class_bias[0] = 1.0;
  ModelParams g = zeros_like(p);
  ModelParams vel = zeros_like(p);

  g.class_bias[0] = 2.0 * p.class_bias[0];
  sgd_step(p, g, vel, 0.1, 0.9, 0.1);
  CHECK(vel.class_bias[0] == doctest::Approx(2.1).epsilon(1e-15));
  CHECK(p.class_bias[0] == doctest::Approx(0.79).epsilon(1e-15));

  g.class_bias[0] = 2.0 * p.class_bias[0];
  sgd_step(p, g, vel, 0.1, 0.9, 0.1);
  CHECK(vel.class_bias[0] ==
        doctest::Approx(3.5490000000000004).epsilon(1e-15));
  CHECK(p.class_bias[0] == doctest::Approx(0.4351).epsilon(1e-15));

  // untouched blocks stay at zero
  CHECK(p.attn_combine[0] == 0.0);
  CHECK(vel.class_weight.at(0, 0) == 0.0);
}

TEST_CASE("sgd_step without decay is plain momentum SGD") {
  Rng rng(1);
  ModelParams p = init_params(2, 2, 2, Extractor::kIdentity,
                              BagReduction::kNone, rng);
  for (auto& block : param_blocks(p)) {
    for (auto part : block.parts) {
      for (double& v : part) v = 0.0;
    }
  }
  p.class_bias[0] = 1.0;
  ModelParams g = zeros_like(p);
  ModelParams vel = zeros_like(p);
  g.class_bias[0] = 2.0;
  sgd_step(p, g, vel, 0.1, 0.9, 0.0);
  CHECK(p.class_bias[0] == doctest::Approx(0.8).epsilon(1e-15));
  g.class_bias[0] = 2.0 * p.class_bias[0];
  sgd_step(p, g, vel, 0.1, 0.9, 0.0);
  CHECK(p.class_bias[0] == doctest::Approx(0.46).epsilon(1e-15));
}

TEST_CASE("sgd_step aborts on non-finite gradients naming the block") {
  Rng rng(1);
  ModelParams p = init_params(2, 2, 2, Extractor::kIdentity,
                              BagReduction::kNone, rng);
  ModelParams g = zeros_like(p);
  ModelParams vel = zeros_like(p);
  g.attn_combine[0] = std::nan("");
  try {
    sgd_step(p, g, vel, 0.1, 0.9, 0.0);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNumeric);
    CHECK(std::string(e.what()).find("attn_combine") != std::string::npos);
  }
}

TEST_CASE("train is deterministic per seed and sensitive to it") {
  MiplDataset ds = gen_synthetic(tiny_synth());
  TrainConfig cfg = tiny_train();

  TrainResult a = train(ds, nullptr, cfg);
  TrainResult b = train(ds, nullptr, cfg);
  CHECK(a.model == b.model);
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].loss_total == b.history[i].loss_total);
    CHECK(a.history[i].train_acc == b.history[i].train_acc);
  }

  cfg.seed = 6;
  TrainResult c = train(ds, nullptr, cfg);
  CHECK_FALSE(a.model == c.model);
}

TEST_CASE("history covers every epoch with the cosine schedule") {
  MiplDataset ds = gen_synthetic(tiny_synth());
  TrainConfig cfg = tiny_train();
  cfg.epochs = 9;
  TrainResult res = train(ds, nullptr, cfg);

  REQUIRE(res.history.size() == 9);
  for (int e = 1; e <= 9; ++e) {
    const EpochStats& s = res.history[static_cast<std::size_t>(e - 1)];
    CHECK(s.epoch == e);
    CHECK(s.lr == cosine_lr(e - 1, 9, cfg.lr_max, cfg.lr_min));
    CHECK(std::isfinite(s.loss_total));
    CHECK(s.loss_m >= 0.0);
    CHECK(s.loss_a >= 0.0);
    CHECK(s.train_acc >= 0.0);
    CHECK(s.train_acc <= 1.0);
    CHECK_FALSE(s.has_test_acc);
  }
  CHECK(res.history[0].lr == cfg.lr_max);
}

TEST_CASE("a test split fills test_acc in every epoch") {
  MiplDataset ds = gen_synthetic(tiny_synth());
  Rng rng(3);
  auto [train_part, test_part] = split(ds, 0.7, rng);
  TrainResult res = train(train_part, &test_part, tiny_train());
  for (const EpochStats& s : res.history) {
    CHECK(s.has_test_acc);
    CHECK(s.test_acc >= 0.0);
    CHECK(s.test_acc <= 1.0);
  }
}

TEST_CASE("no_att and the pll variants report zero attention loss") {
  MiplDataset ds = gen_synthetic(tiny_synth());
  for (Variant v : {Variant::kNoAtt, Variant::kPllMean, Variant::kPllMaxMin}) {
    TrainConfig cfg = tiny_train();
    cfg.variant = v;
    TrainResult res = train(ds, nullptr, cfg);
    for (const EpochStats& s : res.history) {
      CHECK(s.loss_a == 0.0);
      CHECK(s.loss_total == s.loss_m);
    }
  }
}

TEST_CASE("full variant reports a positive attention loss") {
  MiplDataset ds = gen_synthetic(tiny_synth());
  TrainResult res = train(ds, nullptr, tiny_train());
  CHECK(res.history[0].loss_a > 0.0);
}

TEST_CASE("avg variant keeps the weight table at initialization bitwise") {
  MiplDataset ds = gen_synthetic(tiny_synth());
  Matrix init = init_weights(ds);
  TrainConfig cfg = tiny_train();
  cfg.variant = Variant::kAvg;
  TrainHooks hooks;
  std::size_t calls = 0;
  hooks.on_weights = [&](int, const Matrix& w) {
    ++calls;
    CHECK(w == init);
  };
  train(ds, nullptr, cfg, hooks);
  CHECK(calls > 0);
}

TEST_CASE("pro variant rows equal the renormalized candidate posterior") {
  MiplDataset ds = gen_synthetic(tiny_synth());
  TrainConfig cfg = tiny_train();
  cfg.variant = Variant::kPro;
  TrainHooks hooks;
  std::size_t checked = 0;
  hooks.on_weight_update = [&](int, std::size_t bag_idx, const Vec& probs,
                               const Vec& w_new) {
    const std::vector<int>& cand = ds.bags[bag_idx].candidates;
    double mass = 0.0;
    for (int c : cand) mass += probs[static_cast<std::size_t>(c)];
    Vec want(probs.size(), 0.0);
    for (int c : cand) {
      auto ci = static_cast<std::size_t>(c);
      want[ci] = probs[ci] / mass;
    }
    CHECK(w_new == want);
    ++checked;
  };
  train(ds, nullptr, cfg, hooks);
  CHECK(checked == ds.size() * 6);  // every bag, every epoch
}

TEST_CASE("pll variants train on reduced bags") {
  MiplDataset ds = gen_synthetic(tiny_synth());

  TrainConfig cfg = tiny_train();
  cfg.variant = Variant::kPllMean;
  TrainResult mean_res = train(ds, nullptr, cfg);
  CHECK(mean_res.model.reduction == BagReduction::kMean);
  CHECK(mean_res.model.input_dim == ds.dim);

  cfg.variant = Variant::kPllMaxMin;
  TrainResult mm_res = train(ds, nullptr, cfg);
  CHECK(mm_res.model.reduction == BagReduction::kMaxMin);
  CHECK(mm_res.model.input_dim == 2 * ds.dim);

  // reduced models still evaluate on raw bags
  double acc = evaluate(mm_res.model, ds);
  CHECK(acc >= 0.0);
  CHECK(acc <= 1.0);
}

TEST_CASE("train validates its configuration") {
  MiplDataset ds = gen_synthetic(tiny_synth());
  auto bad = [&](void (*tweak)(TrainConfig&)) {
    TrainConfig cfg = tiny_train();
    tweak(cfg);
    CHECK_THROWS_AS(train(ds, nullptr, cfg), Error);
  };
  bad([](TrainConfig& c) { c.lr_max = 0.0; });
  bad([](TrainConfig& c) { c.lr_min = -0.1; });
  bad([](TrainConfig& c) { c.lr_min = c.lr_max * 2; });
  bad([](TrainConfig& c) { c.momentum = 1.0; });
  bad([](TrainConfig& c) { c.weight_decay = -1e-9; });
  bad([](TrainConfig& c) { c.epochs = 0; });
  bad([](TrainConfig& c) { c.batch_size = 0; });
  bad([](TrainConfig& c) { c.attention_loss_weight = -0.001; });
  bad([](TrainConfig& c) {
    c.extractor = Extractor::kMlp;
    c.hidden_dim = 0;
  });
  CHECK_THROWS_AS(train(MiplDataset{}, nullptr, tiny_train()), Error);
}

TEST_CASE("evaluate scores a hand-built model exactly") {
  ModelParams p = axis_model();
  MiplDataset ds;
  ds.num_classes = 2;
  ds.dim = 2;
  ds.bags.push_back(point_bag(10.0, 0.0, 0));   // predicted 0, correct
  ds.bags.push_back(point_bag(0.0, 10.0, 1));   // predicted 1, correct
  ds.bags.push_back(point_bag(10.0, 0.0, 1));   // predicted 0, wrong
  ds.bags.push_back(point_bag(0.0, 10.0, 1));   // predicted 1, correct
  CHECK(evaluate(p, ds) == 0.75);
}

TEST_CASE("evaluate demands truth labels and a non-empty dataset") {
  ModelParams p = axis_model();
  CHECK_THROWS_AS(evaluate(p, MiplDataset{}), Error);

  MiplDataset ds;
  ds.num_classes = 2;
  ds.dim = 2;
  ds.bags.push_back(point_bag(1.0, 0.0, -1));  // truth withheld
  try {
    evaluate(p, ds);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInvalidArgument);
    CHECK(std::string(e.what()).find("truth") != std::string::npos);
  }
}

TEST_CASE("run_experiment aggregates correctly and honors n_runs") {
  MiplDataset ds = gen_synthetic(tiny_synth());
  TrainConfig cfg = tiny_train();
  ExperimentResult res = run_experiment(ds, cfg, 4, 0.7);
  REQUIRE(res.run_accs.size() == 4);

  double mean = 0.0;
  for (double a : res.run_accs) mean += a;
  mean /= 4.0;
  CHECK(res.mean_acc == doctest::Approx(mean).epsilon(1e-15));
  double ss = 0.0;
  for (double a : res.run_accs) ss += (a - mean) * (a - mean);
  CHECK(res.std_acc == doctest::Approx(std::sqrt(ss / 3.0)).epsilon(1e-12));

  ExperimentResult single = run_experiment(ds, cfg, 1, 0.7);
  CHECK(single.std_acc == 0.0);
  CHECK(single.mean_acc == single.run_accs[0]);

  CHECK_THROWS_AS(run_experiment(ds, cfg, 0, 0.7), Error);
}

TEST_CASE("run_experiment is bitwise identical across thread counts") {
  MiplDataset ds = gen_synthetic(tiny_synth());
  TrainConfig cfg = tiny_train();
  ExperimentResult serial = run_experiment(ds, cfg, 5, 0.7, 0);
  for (int threads : {2, 7}) {
    ExperimentResult par = run_experiment(ds, cfg, 5, 0.7, threads);
    CHECK(par.run_accs == serial.run_accs);
    CHECK(par.mean_acc == serial.mean_acc);
    CHECK(par.std_acc == serial.std_acc);
  }
}

TEST_CASE("batch training still lands every bag update per epoch") {
  MiplDataset ds = gen_synthetic(tiny_synth());
  TrainConfig cfg = tiny_train();
  cfg.batch_size = 5;  // uneven tail batch
  std::size_t updates = 0;
  TrainHooks hooks;
  hooks.on_weight_update = [&](int, std::size_t, const Vec&, const Vec&) {
    ++updates;
  };
  TrainResult res = train(ds, nullptr, cfg, hooks);
  CHECK(updates == ds.size() * static_cast<std::size_t>(cfg.epochs));
  CHECK(res.history.size() == static_cast<std::size_t>(cfg.epochs));
}
