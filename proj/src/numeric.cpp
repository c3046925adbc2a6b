#include "numeric.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <string>

#include "errors.hpp"

namespace miplkit {

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

Vec stable_softmax(std::span<const double> v) {
  if (v.empty()) fail(ErrorCode::kInvalidArgument, "stable_softmax: empty input");
  double max = v[0];
  for (double x : v) {
    if (!std::isfinite(x)) {
      fail(ErrorCode::kNumeric, "stable_softmax: non-finite input");
    }
    max = std::max(max, x);
  }
  Vec out(v.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - max);
    sum += out[i];
  }
  for (double& x : out) x /= sum;
  return out;
}

double sigm(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  double e = std::exp(x);
  return e / (1.0 + e);
}

Vec tanh_act(std::span<const double> v) {
  Vec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::tanh(v[i]);
  return out;
}

Vec sigm_act(std::span<const double> v) {
  Vec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = sigm(v[i]);
  return out;
}

double cosine_lr(int t, int total, double lr_max, double lr_min) {
  if (total < 1) fail(ErrorCode::kInvalidArgument, "cosine_lr: total must be >= 1");
  if (t < 0 || t > total) {
    fail(ErrorCode::kInvalidArgument,
         "cosine_lr: epoch " + std::to_string(t) + " outside [0," +
             std::to_string(total) + "]");
  }
  if (lr_min > lr_max) {
    fail(ErrorCode::kInvalidArgument, "cosine_lr: lr_min exceeds lr_max");
  }
  double phase = 3.14159265358979323846 * static_cast<double>(t) /
                 static_cast<double>(total);
  return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + std::cos(phase));
}

std::size_t argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;  // ties keep the lowest index
  }
  return best;
}

}  // namespace miplkit
