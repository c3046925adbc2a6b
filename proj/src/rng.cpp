#include "rng.hpp"

#include <cmath>

#include "errors.hpp"

namespace miplkit {

double Rng::next_uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::next_gauss() {
  // 1-u1 keeps the log argument in (0,1]; u2 spins the angle.
  double u1 = next_uniform();
  double u2 = next_uniform();
  double radius = std::sqrt(-2.0 * std::log(1.0 - u1));
  return radius * std::cos(2.0 * 3.14159265358979323846 * u2);
}

std::uint64_t Rng::next_below(std::uint64_t n) {
  if (n == 0) fail(ErrorCode::kInvalidArgument, "next_below: n must be positive");
  return next_u64() % n;
}

}  // namespace miplkit
