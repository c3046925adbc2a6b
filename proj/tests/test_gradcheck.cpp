#include <set>
#include <string>

#include "doctest.h"
#include "errors.hpp"
#include "gradcheck.hpp"

using namespace miplkit;

TEST_CASE("analytic gradients survive a randomized finite-difference audit") {
  GradcheckReport report = run_gradcheck(123, 40, false);
  CHECK(report.passed);
  CHECK(report.configs_run == 40);
  CHECK(report.tolerance == 1e-4);
  for (const auto& block : report.blocks) {
    CHECK(block.max_rel_err < report.tolerance);
  }
}

TEST_CASE("the audit covers every parameter block of both extractors") {
  GradcheckReport report = run_gradcheck(7, 30, false);
  std::set<std::string> names;
  for (const auto& block : report.blocks) names.insert(block.name);
  for (const char* want :
       {"hidden_weight", "hidden_bias", "attn_combine", "attn_content_weight",
        "attn_gate_weight", "attn_content_bias", "attn_gate_bias",
        "classifier"}) {
    CHECK(names.count(want) == 1);
  }
  CHECK(report.blocks.size() == 8);
}

TEST_CASE("an injected gradient fault is caught") {
  GradcheckReport report = run_gradcheck(123, 10, true);
  CHECK_FALSE(report.passed);
}

TEST_CASE("gradcheck rejects a non-positive config count") {
  CHECK_THROWS_AS(run_gradcheck(1, 0, false), Error);
}
