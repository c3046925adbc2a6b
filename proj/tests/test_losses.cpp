#include <cmath>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "doctest.h"
#include "errors.hpp"
#include "losses.hpp"
#include "matrix.hpp"

using namespace miplkit;

namespace {

void expect_error(ErrorCode code, const std::string& fragment,
                  void (*fn)()) {
  try {
    fn();
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == code);
    CHECK(std::string(e.what()).find(fragment) != std::string::npos);
  }
}

}  // namespace

TEST_CASE("attention_loss matches the hand-computed oracle") {
  std::vector<Vec> scores = {{0.5, 0.5}, {0.9, 0.1, 0.25}};
  AttentionLossResult res = attention_loss(scores);
  CHECK(res.loss == doctest::Approx(0.682401872115683).epsilon(1e-13));
  REQUIRE(res.grads.size() == 2);
  REQUIRE(res.grads[0].size() == 2);
  REQUIRE(res.grads[1].size() == 3);
  // -(log a + 1) / m for a = 0.9, m = 2
  CHECK(res.grads[1][0] ==
        doctest::Approx(-0.44731974217108683).epsilon(1e-13));
}

TEST_CASE("attention entropy of a two-instance half/half bag is ln 2") {
  AttentionLossResult res = attention_loss({{0.5, 0.5}});
  CHECK(std::abs(res.loss - std::log(2.0)) <= 1e-12);
}

TEST_CASE("attention_loss clamps saturated scores instead of blowing up") {
  AttentionLossResult res = attention_loss({{0.0, 1.0}});
  CHECK(std::isfinite(res.loss));
  CHECK(res.loss == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
  for (double g : res.grads[0]) CHECK(std::isfinite(g));
}

TEST_CASE("attention_loss validates input") {
  expect_error(ErrorCode::kInvalidArgument, "no bags",
               [] { attention_loss({}); });
  expect_error(ErrorCode::kInvalidArgument, "outside [0,1]",
               [] { attention_loss({{0.5, 1.5}}); });
  expect_error(ErrorCode::kInvalidArgument, "outside [0,1]",
               [] { attention_loss({{-0.1}}); });
}

TEST_CASE("attention_loss gradient agrees with finite differences") {
  std::vector<Vec> scores = {{0.3, 0.8}, {0.6, 0.45, 0.2}};
  AttentionLossResult res = attention_loss(scores);
  double h = 1e-7;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    for (std::size_t j = 0; j < scores[i].size(); ++j) {
      auto up = scores;
      auto dn = scores;
      up[i][j] += h;
      dn[i][j] -= h;
      double fd =
          (attention_loss(up).loss - attention_loss(dn).loss) / (2 * h);
      CHECK(res.grads[i][j] == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("init_weights puts 1/|S| on each candidate, zero elsewhere") {
  MiplDataset ds;
  ds.num_classes = 4;
  ds.dim = 1;
  ds.bags.resize(2);
  ds.bags[0].instances = Matrix(1, 1);
  ds.bags[0].candidates = {1, 3};
  ds.bags[1].instances = Matrix(1, 1);
  ds.bags[1].candidates = {0, 1, 2};

  Matrix w = init_weights(ds);
  REQUIRE(w.rows() == 2);
  REQUIRE(w.cols() == 4);
  CHECK(w.at(0, 0) == 0.0);
  CHECK(w.at(0, 1) == 0.5);
  CHECK(w.at(0, 2) == 0.0);
  CHECK(w.at(0, 3) == 0.5);
  CHECK(w.at(1, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(w.at(1, 3) == 0.0);

  ds.bags[1].candidates.clear();
  CHECK_THROWS_AS(init_weights(ds), Error);
}

TEST_CASE("momentum_lambda walks (T - t) / T") {
  CHECK(momentum_lambda(0, 10) == 1.0);
  CHECK(momentum_lambda(10, 10) == 0.0);
  CHECK(momentum_lambda(1, 4) == 0.75);
  CHECK(momentum_lambda(25, 100) == 0.75);
  expect_error(ErrorCode::kInvalidArgument, "total",
               [] { momentum_lambda(0, 0); });
  expect_error(ErrorCode::kInvalidArgument, "outside",
               [] { momentum_lambda(-1, 10); });
  expect_error(ErrorCode::kInvalidArgument, "outside",
               [] { momentum_lambda(11, 10); });
}

TEST_CASE("update_weights matches the frozen oracle bitwise") {
  Vec w_prev{0.5, 0.5, 0.0};
  Vec probs{0.2, 0.6, 0.2};
  std::vector<int> cand{0, 1};

  Vec w = update_weights(w_prev, probs, cand, 0.3);
  CHECK(w[0] == 0.32499999999999996);
  CHECK(w[1] == 0.6749999999999999);
  CHECK(w[2] == 0.0);

  Vec w_half = update_weights(w_prev, probs, cand, 0.5);
  CHECK(w_half == Vec{0.375, 0.625, 0.0});
}

TEST_CASE("update_weights degenerates bitwise at lambda 0 and 1") {
  Vec w_prev{0.25, 0.75, 0.0};
  Vec probs{0.123456, 0.654321, 0.222223};
  std::vector<int> cand{0, 1};

  Vec keep = update_weights(w_prev, probs, cand, 1.0);
  CHECK(keep == w_prev);

  Vec fresh = update_weights(w_prev, probs, cand, 0.0);
  double mass = probs[0] + probs[1];
  CHECK(fresh[0] == probs[0] / mass);
  CHECK(fresh[1] == probs[1] / mass);
  CHECK(fresh[2] == 0.0);
}

TEST_CASE("update_weights keeps rows on the simplex over the support") {
  Vec w_prev{0.5, 0.25, 0.25, 0.0};
  Vec probs{0.1, 0.2, 0.3, 0.4};
  std::vector<int> cand{0, 1, 2};
  for (double lambda : {0.0, 0.17, 0.5, 0.99, 1.0}) {
    Vec w = update_weights(w_prev, probs, cand, lambda);
    double sum = 0.0;
    for (double v : w) {
      CHECK(v >= 0.0);
      sum += v;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-9);
    CHECK(w[3] == 0.0);  // off-support stays exactly zero
  }
}

TEST_CASE("update_weights validates its input") {
  expect_error(ErrorCode::kInvalidArgument, "length mismatch", [] {
    update_weights(Vec{0.5, 0.5}, Vec{1.0}, {0}, 0.5);
  });
  expect_error(ErrorCode::kInvalidArgument, "lambda", [] {
    update_weights(Vec{0.5, 0.5}, Vec{0.5, 0.5}, {0}, 1.5);
  });
  expect_error(ErrorCode::kInvalidArgument, "lambda", [] {
    update_weights(Vec{0.5, 0.5}, Vec{0.5, 0.5}, {0}, -0.01);
  });
  expect_error(ErrorCode::kInvalidArgument, "candidate", [] {
    update_weights(Vec{0.5, 0.5}, Vec{0.5, 0.5}, {2}, 0.5);
  });
  expect_error(ErrorCode::kNumeric, "collapsed", [] {
    update_weights(Vec{0.5, 0.5, 0.0}, Vec{1e-31, 1e-31, 1.0}, {0, 1}, 0.5);
  });
}

TEST_CASE("disambiguation_loss matches the hand-computed oracle") {
  Vec weights{0.5, 0.0, 0.5};
  Vec probs{0.25, 0.25, 0.5};
  std::vector<int> cand{0, 2};
  BagLossResult res = disambiguation_loss(weights, probs, cand);
  CHECK(res.loss == doctest::Approx(1.0397207708399179).epsilon(1e-13));
  CHECK(res.grad_probs[0] == -2.0);
  CHECK(res.grad_probs[1] == 0.0);
  CHECK(res.grad_probs[2] == -1.0);
}

TEST_CASE("uniform weights over two candidates and uniform probs give ln 4") {
  // |S| = 2, k = 4, p uniform
  Vec weights{0.5, 0.5, 0.0, 0.0};
  Vec probs{0.25, 0.25, 0.25, 0.25};
  std::vector<int> cand{0, 1};
  BagLossResult res = disambiguation_loss(weights, probs, cand);
  CHECK(std::abs(res.loss - std::log(4.0)) <= 1e-12);
}

TEST_CASE("disambiguation_loss clamps vanishing probabilities") {
  Vec weights{1.0, 0.0};
  Vec probs{0.0, 1.0};
  std::vector<int> cand{0};
  BagLossResult res = disambiguation_loss(weights, probs, cand);
  CHECK(res.loss == doctest::Approx(-std::log(1e-12)).epsilon(1e-13));
  CHECK(res.grad_probs[0] == 0.0);  // flat inside the clamp
}

TEST_CASE("disambiguation_loss rejects weight mass outside the candidates") {
  expect_error(ErrorCode::kInvalidArgument, "outside the candidate set", [] {
    disambiguation_loss(Vec{0.5, 0.5}, Vec{0.5, 0.5}, {0});
  });
  expect_error(ErrorCode::kInvalidArgument, "length mismatch", [] {
    disambiguation_loss(Vec{1.0}, Vec{0.5, 0.5}, {0});
  });
}

TEST_CASE("total_loss combines terms linearly") {
  CHECK(total_loss(1.5, 2.0, 0.001) == 1.5 + 0.001 * 2.0);
  CHECK(total_loss(1.5, 2.0, 0.0) == 1.5);
  expect_error(ErrorCode::kInvalidArgument, "attention weight",
               [] { total_loss(1.0, 1.0, -0.5); });
}
