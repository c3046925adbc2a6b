#ifndef MIPLKIT_LOSSES_HPP
#define MIPLKIT_LOSSES_HPP

// Loss layer: the attention entropy term, the per-bag candidate weight table
// with its momentum update, the weighted cross-entropy disambiguation loss,
// and the combined objective. Everything returns upstream gradients for the
// model's backward pass.

#include <vector>

#include "dataset.hpp"
#include "matrix.hpp"

namespace miplkit {

// Mean over bags of -sum_j a_j log a_j. Scores must lie in [0,1]; the log is
// clamped at 1e-12 so saturated sigmoids stay finite. grads[i][j] is the
// derivative for score j of bag i: -(log a + 1) / m.
struct AttentionLossResult {
  double loss = 0.0;
  std::vector<Vec> grads;
};
AttentionLossResult attention_loss(const std::vector<Vec>& scores);

// Weight table rows: 1/|S_i| on each bag's candidates, zero elsewhere.
Matrix init_weights(const MiplDataset& ds);

// (T - t) / T with t in [0, T]; the trade-off between keeping the previous
// weights and trusting the current classifier.
double momentum_lambda(int t, int total);

// One momentum update of a bag's weight row: on candidates,
// w_new = lambda * w_prev + (1 - lambda) * p_c / sum_{j in S} p_j, zero
// elsewhere. Errors when the candidate probability mass falls below 1e-30
// (collapsed classifier).
Vec update_weights(const Vec& w_prev, const Vec& probs,
                   const std::vector<int>& candidates, double lambda);

// Weighted cross-entropy against the weight row: sum_c w_c * -log p_c, with
// the log clamped at 1e-12. grad_probs feeds backward(), which turns it into
// the classic p - w at the logits. candidates bound the support of w.
struct BagLossResult {
  double loss = 0.0;
  Vec grad_probs;
};
BagLossResult disambiguation_loss(const Vec& weights, const Vec& probs,
                                  const std::vector<int>& candidates);

// loss_m + attention_weight * loss_a
double total_loss(double loss_m, double loss_a, double attention_weight);

}  // namespace miplkit

#endif  // MIPLKIT_LOSSES_HPP
