#ifndef MIPLKIT_GRADCHECK_HPP
#define MIPLKIT_GRADCHECK_HPP

// Randomized finite-difference audit of the analytic gradients. Every config
// draws a small random model (both extractors), a random bag, a candidate set
// and an Eq-7-style weight row (held fixed while differentiating), then
// compares backward() with central differences entry by entry.

#include <cstdint>
#include <string>
#include <vector>

namespace miplkit {

struct GradcheckReport {
  struct Block {
    std::string name;
    double max_rel_err = 0.0;
  };
  std::vector<Block> blocks;  // aggregated over configs, reporting order
  double tolerance = 1e-4;
  int configs_run = 0;
  bool passed = false;
};

// step 1e-5; relative error uses max(|analytic|, |fd|, 1e-6) as denominator.
// inject_fault corrupts one analytic gradient entry per config so the suite
// must fail (negative control for the harness itself).
GradcheckReport run_gradcheck(std::uint64_t seed, int num_configs,
                              bool inject_fault);

}  // namespace miplkit

#endif  // MIPLKIT_GRADCHECK_HPP
