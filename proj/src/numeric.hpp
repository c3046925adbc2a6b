#ifndef MIPLKIT_NUMERIC_HPP
#define MIPLKIT_NUMERIC_HPP

#include <span>
#include <string>

#include "matrix.hpp"

namespace miplkit {

// Shortest decimal that round-trips the exact double.
std::string format_double(double v);

// Max-shifted softmax. Entries in (0,1], sum within 1e-12 of 1.
Vec stable_softmax(std::span<const double> v);

// Branch-wise logistic; never overflows for large |x|.
double sigm(double x);

Vec tanh_act(std::span<const double> v);
Vec sigm_act(std::span<const double> v);

// lr_min + 0.5 * (lr_max - lr_min) * (1 + cos(pi * t / total)).
// t counts from 0 (returns lr_max) to total (returns lr_min).
double cosine_lr(int t, int total, double lr_max, double lr_min);

std::size_t argmax(std::span<const double> v);

}  // namespace miplkit

#endif  // MIPLKIT_NUMERIC_HPP
