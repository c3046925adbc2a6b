#include "gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "errors.hpp"
#include "losses.hpp"
#include "model.hpp"
#include "rng.hpp"

namespace miplkit {

namespace {

constexpr double kStep = 1e-5;
constexpr double kTolerance = 1e-4;

double rel_err(double a, double b) {
  return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), 1e-6});
}

struct Config {
  ModelParams model;
  Matrix instances;
  std::vector<int> candidates;
  Vec weight_row;
  double att_weight;
};

// redraw until no ReLU pre-activation sits near its kink, where central
// differences straddle the non-smooth point
Config draw_config(Rng& rng, Extractor extractor) {
  const double att_choices[] = {0.0, 0.0001, 0.001, 0.5, 1.0};
  for (int attempt = 0; attempt < 1000; ++attempt) {
    int k = 2 + static_cast<int>(rng.next_below(3));   // 2..4
    int d = 1 + static_cast<int>(rng.next_below(3));   // 1..3
    int dp = 1 + static_cast<int>(rng.next_below(3));  // 1..3
    int n = 1 + static_cast<int>(rng.next_below(4));   // 1..4

    Config cfg;
    cfg.att_weight = att_choices[rng.next_below(5)];
    cfg.model = init_params(d, dp, k, extractor, BagReduction::kNone, rng);
    cfg.instances = Matrix(static_cast<std::size_t>(n), static_cast<std::size_t>(d));
    for (std::size_t i = 0; i < cfg.instances.size(); ++i) {
      cfg.instances.data()[i] = rng.next_gauss();
    }

    int cand_size = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(k)));
    std::vector<int> classes(static_cast<std::size_t>(k));
    for (int c = 0; c < k; ++c) classes[static_cast<std::size_t>(c)] = c;
    rng.shuffle(classes);
    cfg.candidates.assign(classes.begin(), classes.begin() + cand_size);
    std::sort(cfg.candidates.begin(), cfg.candidates.end());

    ForwardTrace tr = forward(cfg.model, cfg.instances);
    if (extractor == Extractor::kMlp) {
      bool near_kink = false;
      for (std::size_t i = 0; i < tr.hidden_pre.size(); ++i) {
        if (std::fabs(tr.hidden_pre.data()[i]) < 1e-3) near_kink = true;
      }
      if (near_kink) continue;
    }

    // weight row built by one momentum update, then held fixed
    Vec init(static_cast<std::size_t>(k), 0.0);
    for (int c : cfg.candidates) {
      init[static_cast<std::size_t>(c)] =
          1.0 / static_cast<double>(cfg.candidates.size());
    }
    double lambda = static_cast<double>(rng.next_below(11)) / 10.0;
    cfg.weight_row = update_weights(init, tr.probs, cfg.candidates, lambda);
    return cfg;
  }
  fail(ErrorCode::kNumeric, "gradcheck: could not sample a kink-free config");
}

double loss_of(const Config& cfg) {
  ForwardTrace tr = forward(cfg.model, cfg.instances);
  BagLossResult dis = disambiguation_loss(cfg.weight_row, tr.probs, cfg.candidates);
  double la = 0.0;
  if (cfg.att_weight > 0.0) {
    la = attention_loss({tr.attn}).loss;
  }
  return total_loss(dis.loss, la, cfg.att_weight);
}

}  // namespace

GradcheckReport run_gradcheck(std::uint64_t seed, int num_configs,
                              bool inject_fault) {
  if (num_configs < 1) {
    fail(ErrorCode::kInvalidArgument, "gradcheck: num_configs must be >= 1");
  }
  Rng rng(seed);
  std::map<std::string, double> worst;

  for (int c = 0; c < num_configs; ++c) {
    Extractor extractor = c % 2 == 0 ? Extractor::kIdentity : Extractor::kMlp;
    Config cfg = draw_config(rng, extractor);

    ForwardTrace tr = forward(cfg.model, cfg.instances);
    BagLossResult dis = disambiguation_loss(cfg.weight_row, tr.probs, cfg.candidates);
    Vec att_grad;
    if (cfg.att_weight > 0.0) {
      att_grad = attention_loss({tr.attn}).grads[0];
      for (double& g : att_grad) g *= cfg.att_weight;
    }
    ModelParams grads = backward(cfg.model, tr, dis.grad_probs, att_grad);
    if (inject_fault) {
      grads.attn_combine[0] = grads.attn_combine[0] * 1.5 + 1e-3;
    }

    auto pblocks = param_blocks(cfg.model);
    auto gblocks = param_blocks(grads);
    for (std::size_t b = 0; b < pblocks.size(); ++b) {
      double& block_worst = worst[pblocks[b].name];
      for (std::size_t part = 0; part < pblocks[b].parts.size(); ++part) {
        auto pspan = pblocks[b].parts[part];
        auto gspan = gblocks[b].parts[part];
        for (std::size_t i = 0; i < pspan.size(); ++i) {
          double saved = pspan[i];
          pspan[i] = saved + kStep;
          double up = loss_of(cfg);
          pspan[i] = saved - kStep;
          double down = loss_of(cfg);
          pspan[i] = saved;
          double fd = (up - down) / (2.0 * kStep);
          block_worst = std::max(block_worst, rel_err(gspan[i], fd));
        }
      }
    }
  }

  GradcheckReport report;
  report.tolerance = kTolerance;
  report.configs_run = num_configs;
  report.passed = true;
  const char* order[] = {"hidden_weight",      "hidden_bias",
                         "attn_combine",       "attn_content_weight",
                         "attn_gate_weight",   "attn_content_bias",
                         "attn_gate_bias",     "classifier"};
  for (const char* name : order) {
    auto it = worst.find(name);
    if (it == worst.end()) continue;
    report.blocks.push_back({name, it->second});
    if (!(it->second < kTolerance)) report.passed = false;
  }
  return report;
}

}  // namespace miplkit
