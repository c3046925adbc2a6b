#ifndef MIPLKIT_RNG_HPP
#define MIPLKIT_RNG_HPP

#include <cstdint>
#include <vector>

namespace miplkit {

// Deterministic splitmix64 generator. The exact update is part of the
// on-disk reproducibility contract, so every derived quantity below is
// defined in terms of next_u64():
//
//   state += 0x9E3779B97F4A7C15
//   z = state
//   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   return z ^ (z >> 31)
//
//   next_uniform = (next_u64() >> 11) * 2^-53            in [0,1)
//   next_gauss   = sqrt(-2 ln(1-u1)) * cos(2 pi u2)      u1,u2 uniform
//   next_below(n)= next_u64() % n
//   shuffle      = Fisher-Yates, i from n-1 down to 1, j = next_below(i+1)
//
// next_gauss draws exactly two uniforms per call (no caching of the
// second Box-Muller value), so the stream position stays predictable.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  double next_uniform();
  double next_gauss();
  std::uint64_t next_below(std::uint64_t n);

  template <typename T>
  void shuffle(std::vector<T>& values) {
    if (values.size() < 2) return;
    for (std::size_t i = values.size() - 1; i > 0; --i) {
      std::size_t j = static_cast<std::size_t>(next_below(i + 1));
      std::swap(values[i], values[j]);
    }
  }

 private:
  std::uint64_t state_;
};

}  // namespace miplkit

#endif  // MIPLKIT_RNG_HPP
