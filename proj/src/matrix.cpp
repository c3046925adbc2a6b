#include "matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "errors.hpp"

namespace miplkit {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
  return m;
}

void Matrix::fill(double value) {
  std::fill(data_.begin(), data_.end(), value);
}

Vec matvec(const Matrix& m, std::span<const double> v) {
  if (m.cols() != v.size()) {
    fail(ErrorCode::kInvalidArgument,
         "matvec: matrix is " + std::to_string(m.rows()) + "x" +
             std::to_string(m.cols()) + " but vector has length " +
             std::to_string(v.size()));
  }
  Vec out(m.rows(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    double acc = 0.0;
    auto row = m.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) acc += row[c] * v[c];
    out[r] = acc;
  }
  return out;
}

Vec matvec_transposed(const Matrix& m, std::span<const double> v) {
  if (m.rows() != v.size()) {
    fail(ErrorCode::kInvalidArgument,
         "matvec_transposed: matrix is " + std::to_string(m.rows()) + "x" +
             std::to_string(m.cols()) + " but vector has length " +
             std::to_string(v.size()));
  }
  Vec out(m.cols(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) out[c] += row[c] * v[r];
  }
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    fail(ErrorCode::kInvalidArgument,
         "dot: lengths differ (" + std::to_string(a.size()) + " vs " +
             std::to_string(b.size()) + ")");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) {
    fail(ErrorCode::kInvalidArgument,
         "axpy: lengths differ (" + std::to_string(x.size()) + " vs " +
             std::to_string(y.size()) + ")");
  }
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

bool all_finite(std::span<const double> values) {
  for (double v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace miplkit
