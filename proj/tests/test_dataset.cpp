#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "doctest.h"
#include "errors.hpp"
#include "rng.hpp"

using namespace miplkit;

namespace {

SynthConfig small_config() {
  SynthConfig cfg;
  cfg.num_classes = 4;
  cfg.num_distractors = 2;
  cfg.false_positives = 2;
  cfg.bags_per_class = 6;
  cfg.min_instances = 3;
  cfg.max_instances = 8;
  cfg.seed = 11;
  return cfg;
}

}  // namespace

TEST_CASE("gen_synthetic shapes and bookkeeping") {
  SynthConfig cfg = small_config();
  MiplDataset ds = gen_synthetic(cfg);

  CHECK(ds.num_classes == 4);
  CHECK(ds.dim == 6);  // classes + distractors
  CHECK(ds.bags.size() == 24);

  int per_class[4] = {0, 0, 0, 0};
  for (const Bag& b : ds.bags) {
    CHECK(b.size() >= 3);
    CHECK(b.size() <= 8);
    CHECK(b.instances.cols() == 6);
    CHECK(b.truth >= 0);
    CHECK(b.truth < 4);
    ++per_class[b.truth];

    // candidate set: sorted, truth included, |S| = 1 + r, all in range
    CHECK(b.candidates.size() == 3);
    CHECK(std::is_sorted(b.candidates.begin(), b.candidates.end()));
    CHECK(std::binary_search(b.candidates.begin(), b.candidates.end(),
                             b.truth));
    std::set<int> uniq(b.candidates.begin(), b.candidates.end());
    CHECK(uniq.size() == b.candidates.size());
    for (int c : b.candidates) {
      CHECK(c >= 0);
      CHECK(c < 4);
    }

    // at least one positive instance, labels consistent with truth
    CHECK(b.instance_labels.size() == b.size());
    bool has_positive = false;
    for (int l : b.instance_labels) {
      if (l == b.truth) has_positive = true;
      CHECK((l == b.truth || l >= 4));
    }
    CHECK(has_positive);
  }
  for (int c = 0; c < 4; ++c) CHECK(per_class[c] == 6);

  CHECK(ds.avg_candidates() == 3.0);
  CHECK(ds.avg_instances() >= 3.0);
  CHECK(ds.avg_instances() <= 8.0);
}

TEST_CASE("gen_synthetic is deterministic per seed") {
  SynthConfig cfg = small_config();
  MiplDataset a = gen_synthetic(cfg);
  MiplDataset b = gen_synthetic(cfg);
  REQUIRE(a.bags.size() == b.bags.size());
  for (std::size_t i = 0; i < a.bags.size(); ++i) {
    CHECK(a.bags[i].instances == b.bags[i].instances);
    CHECK(a.bags[i].candidates == b.bags[i].candidates);
    CHECK(a.bags[i].truth == b.bags[i].truth);
  }
  cfg.seed = 12;
  MiplDataset c = gen_synthetic(cfg);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.bags.size() && !any_diff; ++i) {
    any_diff = !(a.bags[i].instances == c.bags[i].instances);
  }
  CHECK(any_diff);
}

TEST_CASE("gen_synthetic cluster separation holds") {
  SynthConfig cfg = small_config();
  cfg.cluster_separation = 6.0;
  MiplDataset ds = gen_synthetic(cfg);
  // class means sit on scaled axes: the positive instances of different
  // truths should be far apart on average; crude check via per-class means
  std::vector<Vec> means(4, Vec(static_cast<std::size_t>(ds.dim), 0.0));
  std::vector<int> counts(4, 0);
  for (const Bag& b : ds.bags) {
    for (std::size_t i = 0; i < b.size(); ++i) {
      if (b.instance_labels[i] != b.truth) continue;
      for (std::size_t j = 0; j < means[0].size(); ++j) {
        means[static_cast<std::size_t>(b.truth)][j] += b.instances.at(i, j);
      }
      ++counts[b.truth];
    }
  }
  for (int c = 0; c < 4; ++c) {
    for (double& v : means[static_cast<std::size_t>(c)]) v /= counts[c];
  }
  for (int a = 0; a < 4; ++a) {
    for (int b2 = a + 1; b2 < 4; ++b2) {
      double d2 = 0.0;
      for (std::size_t j = 0; j < means[0].size(); ++j) {
        double d = means[static_cast<std::size_t>(a)][j] -
                   means[static_cast<std::size_t>(b2)][j];
        d2 += d * d;
      }
      CHECK(std::sqrt(d2) > 4.0);  // nominal 6, generous sampling slack
    }
  }
}

TEST_CASE("gen_synthetic validation errors") {
  SynthConfig cfg = small_config();
  cfg.false_positives = 4;
  try {
    gen_synthetic(cfg);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInvalidArgument);
    CHECK(std::string(e.what()).find("r must be < k") != std::string::npos);
  }
  cfg = small_config();
  cfg.false_positives = 0;
  CHECK_THROWS_AS(gen_synthetic(cfg), Error);
  cfg = small_config();
  cfg.min_instances = 9;  // > max
  CHECK_THROWS_AS(gen_synthetic(cfg), Error);
  cfg = small_config();
  cfg.dim = 3;  // < classes + distractors
  CHECK_THROWS_AS(gen_synthetic(cfg), Error);
  cfg = small_config();
  cfg.min_positive_fraction = 0.8;
  cfg.max_positive_fraction = 0.2;
  CHECK_THROWS_AS(gen_synthetic(cfg), Error);
}

TEST_CASE("corrupt_candidates properties") {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<int> cand = corrupt_candidates(2, 6, 3, rng);
    CHECK(cand.size() == 4);
    CHECK(std::is_sorted(cand.begin(), cand.end()));
    CHECK(std::binary_search(cand.begin(), cand.end(), 2));
    std::set<int> uniq(cand.begin(), cand.end());
    CHECK(uniq.size() == 4);
    for (int c : cand) {
      CHECK(c >= 0);
      CHECK(c < 6);
    }
  }
  // r = k-1 forces the full label set
  std::vector<int> all = corrupt_candidates(1, 4, 3, rng);
  CHECK(all == std::vector<int>{0, 1, 2, 3});
}

TEST_CASE("corrupt_candidates covers all false-positive choices") {
  Rng rng(99);
  std::set<std::vector<int>> seen;
  for (int trial = 0; trial < 500; ++trial) {
    seen.insert(corrupt_candidates(0, 4, 1, rng));
  }
  // truth 0 plus one of {1,2,3}
  CHECK(seen.size() == 3);
}

TEST_CASE("split sizes, disjointness, determinism") {
  MiplDataset ds = gen_synthetic(small_config());  // 24 bags
  Rng rng(7);
  auto [train, test] = split(ds, 0.7, rng);
  CHECK(train.bags.size() == 17);  // round(16.8)
  CHECK(test.bags.size() == 7);
  CHECK(train.num_classes == ds.num_classes);
  CHECK(test.dim == ds.dim);

  // the two sides partition the original multiset of bags
  auto key = [](const Bag& b) {
    std::ostringstream os;
    os << b.truth << ':';
    for (double v : std::vector<double>(
             b.instances.data(), b.instances.data() + b.instances.size())) {
      os << v << ',';
    }
    return os.str();
  };
  std::multiset<std::string> orig, got;
  for (const Bag& b : ds.bags) orig.insert(key(b));
  for (const Bag& b : train.bags) got.insert(key(b));
  for (const Bag& b : test.bags) got.insert(key(b));
  CHECK(orig == got);

  Rng rng2(7);
  auto [train2, test2] = split(ds, 0.7, rng2);
  REQUIRE(train2.bags.size() == train.bags.size());
  for (std::size_t i = 0; i < train.bags.size(); ++i) {
    CHECK(train.bags[i].instances == train2.bags[i].instances);
  }
}

TEST_CASE("split keeps both sides nonempty at extreme ratios") {
  MiplDataset ds = gen_synthetic(small_config());
  Rng rng(1);
  auto [tr_hi, te_hi] = split(ds, 0.999, rng);
  CHECK(te_hi.bags.size() == 1);
  auto [tr_lo, te_lo] = split(ds, 0.001, rng);
  CHECK(tr_lo.bags.size() == 1);

  MiplDataset tiny;
  tiny.num_classes = 2;
  tiny.dim = 1;
  tiny.bags.resize(1);
  CHECK_THROWS_AS(split(tiny, 0.5, rng), Error);
}

TEST_CASE("MIPL1 round-trip is bitwise exact") {
  MiplDataset ds = gen_synthetic(small_config());
  std::ostringstream out;
  save(ds, out);
  std::string text = out.str();

  std::istringstream in(text);
  MiplDataset back = load(in, "mem");
  CHECK(back.num_classes == ds.num_classes);
  CHECK(back.dim == ds.dim);
  REQUIRE(back.bags.size() == ds.bags.size());
  for (std::size_t i = 0; i < ds.bags.size(); ++i) {
    CHECK(back.bags[i].instances == ds.bags[i].instances);
    CHECK(back.bags[i].candidates == ds.bags[i].candidates);
    CHECK(back.bags[i].truth == ds.bags[i].truth);
  }

  // a second save of the loaded dataset reproduces the bytes
  std::ostringstream out2;
  save(back, out2);
  CHECK(out2.str() == text);
}

TEST_CASE("MIPL1 hidden truth round-trips as '-'") {
  MiplDataset ds = gen_synthetic(small_config());
  for (Bag& b : ds.bags) b.truth = -1;
  std::ostringstream out;
  save(ds, out);
  CHECK(out.str().find("truth=-\n") != std::string::npos);
  std::istringstream in(out.str());
  MiplDataset back = load(in, "mem");
  for (const Bag& b : back.bags) CHECK(b.truth == -1);
}

TEST_CASE("MIPL1 parse errors carry line numbers") {
  auto expect_parse_error = [](const std::string& text,
                               const std::string& fragment) {
    std::istringstream in(text);
    try {
      load(in, "mem");
      FAIL("expected parse error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kParse);
      CHECK(std::string(e.what()).find(fragment) != std::string::npos);
    }
  };

  expect_parse_error("NOPE k=2 d=1 m=0\n", "mem:1");
  expect_parse_error("MIPL1 k=2 d=1\n", "m=");
  expect_parse_error("MIPL1 k=2 d=1 m=1\n", "expected 1 bags, got 0");
  expect_parse_error(
      "MIPL1 k=2 d=1 m=1\nBAG n=1 cand=0,0 truth=0\n0.5\n", "duplicate");
  expect_parse_error(
      "MIPL1 k=2 d=1 m=1\nBAG n=1 cand=2 truth=-\n0.5\n", "outside");
  expect_parse_error(
      "MIPL1 k=2 d=1 m=1\nBAG n=1 cand=0 truth=1\n0.5\n", "truth");
  expect_parse_error(
      "MIPL1 k=2 d=1 m=1\nBAG n=1 cand=0 truth=0\n0.5 0.5\n", "mem:3");
  expect_parse_error(
      "MIPL1 k=2 d=2 m=1\nBAG n=1 cand=0 truth=0\n0.5\n", "mem:3");
  expect_parse_error(
      "MIPL1 k=2 d=1 m=1\nBAG n=1 cand=0 truth=0\n0.5\nextra\n", "mem:4");
  expect_parse_error(
      "MIPL1 k=2 d=1 m=1\n\nBAG n=1 cand=0 truth=0\n0.5\n", "blank");
}

TEST_CASE("load rejects missing file with kIo") {
  try {
    load("/nonexistent/path/x.mipl");
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kIo);
  }
}

TEST_CASE("reduce_mean and reduce_maxmin oracles") {
  Bag b;
  b.instances = Matrix(3, 2);
  // rows: (1,4), (3,0), (5,2)
  b.instances.at(0, 0) = 1;
  b.instances.at(0, 1) = 4;
  b.instances.at(1, 0) = 3;
  b.instances.at(1, 1) = 0;
  b.instances.at(2, 0) = 5;
  b.instances.at(2, 1) = 2;

  CHECK(reduce_mean(b) == Vec{3.0, 2.0});
  CHECK(reduce_maxmin(b) == Vec{5.0, 4.0, 1.0, 0.0});

  Bag empty;
  CHECK_THROWS_AS(reduce_mean(empty), Error);
  CHECK_THROWS_AS(reduce_maxmin(empty), Error);
}
