#include "losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "errors.hpp"

namespace miplkit {

namespace {
constexpr double kLogClamp = 1e-12;
}

AttentionLossResult attention_loss(const std::vector<Vec>& scores) {
  if (scores.empty()) {
    fail(ErrorCode::kInvalidArgument, "attention_loss: no bags");
  }
  double m = static_cast<double>(scores.size());
  AttentionLossResult res;
  res.grads.resize(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    res.grads[i].resize(scores[i].size());
    for (std::size_t j = 0; j < scores[i].size(); ++j) {
      double a = scores[i][j];
      if (!(a >= 0.0 && a <= 1.0)) {
        fail(ErrorCode::kInvalidArgument,
             "attention_loss: score " + std::to_string(a) + " outside [0,1]");
      }
      double la = std::log(std::max(a, kLogClamp));
      res.loss -= a * la / m;
      res.grads[i][j] = -(la + 1.0) / m;
    }
  }
  return res;
}

Matrix init_weights(const MiplDataset& ds) {
  Matrix w(ds.size(), static_cast<std::size_t>(ds.num_classes));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const std::vector<int>& cand = ds.bags[i].candidates;
    if (cand.empty()) {
      fail(ErrorCode::kInvalidArgument,
           "init_weights: bag " + std::to_string(i) + " has no candidates");
    }
    double v = 1.0 / static_cast<double>(cand.size());
    for (int c : cand) w.at(i, static_cast<std::size_t>(c)) = v;
  }
  return w;
}

double momentum_lambda(int t, int total) {
  if (total < 1) fail(ErrorCode::kInvalidArgument, "momentum_lambda: total must be >= 1");
  if (t < 0 || t > total) {
    fail(ErrorCode::kInvalidArgument, "momentum_lambda: t outside [0, total]");
  }
  return static_cast<double>(total - t) / static_cast<double>(total);
}

Vec update_weights(const Vec& w_prev, const Vec& probs,
                   const std::vector<int>& candidates, double lambda) {
  if (w_prev.size() != probs.size()) {
    fail(ErrorCode::kInvalidArgument, "update_weights: weight/prob length mismatch");
  }
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    fail(ErrorCode::kInvalidArgument, "update_weights: lambda outside [0,1]");
  }
  double mass = 0.0;
  for (int c : candidates) {
    if (c < 0 || static_cast<std::size_t>(c) >= probs.size()) {
      fail(ErrorCode::kInvalidArgument, "update_weights: candidate outside 0..k-1");
    }
    mass += probs[static_cast<std::size_t>(c)];
  }
  if (mass < 1e-30) {
    fail(ErrorCode::kNumeric,
         "update_weights: candidate probability mass below 1e-30, classifier collapsed");
  }
  Vec w_new(w_prev.size(), 0.0);
  for (int c : candidates) {
    auto ci = static_cast<std::size_t>(c);
    w_new[ci] = lambda * w_prev[ci] + (1.0 - lambda) * (probs[ci] / mass);
  }
  return w_new;
}

BagLossResult disambiguation_loss(const Vec& weights, const Vec& probs,
                                  const std::vector<int>& candidates) {
  if (weights.size() != probs.size()) {
    fail(ErrorCode::kInvalidArgument,
         "disambiguation_loss: weight/prob length mismatch");
  }
  BagLossResult res;
  res.grad_probs.assign(probs.size(), 0.0);
  for (std::size_t c = 0; c < weights.size(); ++c) {
    double w = weights[c];
    if (w == 0.0) continue;
    if (!std::binary_search(candidates.begin(), candidates.end(),
                            static_cast<int>(c))) {
      fail(ErrorCode::kInvalidArgument,
           "disambiguation_loss: weight on class " + std::to_string(c) +
               " outside the candidate set");
    }
    double p = probs[c];
    res.loss -= w * std::log(std::max(p, kLogClamp));
    if (p > kLogClamp) res.grad_probs[c] = -w / p;  // clamped region is flat
  }
  return res;
}

double total_loss(double loss_m, double loss_a, double attention_weight) {
  if (!(attention_weight >= 0.0)) {
    fail(ErrorCode::kInvalidArgument, "total_loss: attention weight must be >= 0");
  }
  return loss_m + attention_weight * loss_a;
}

}  // namespace miplkit
