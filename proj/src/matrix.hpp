#ifndef MIPLKIT_MATRIX_HPP
#define MIPLKIT_MATRIX_HPP

#include <cstddef>
#include <span>
#include <vector>

namespace miplkit {

using Vec = std::vector<double>;

// Dense row-major matrix of doubles. Plain storage, no BLAS ambitions.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::size_t size() const { return data_.size(); }

  void fill(double value);

  friend bool operator==(const Matrix& a, const Matrix& b) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Vec data_;
};

// y = m v. Throws kInvalidArgument naming both shapes on mismatch.
Vec matvec(const Matrix& m, std::span<const double> v);

// y = m^T v (v has m.rows() entries, result has m.cols()).
Vec matvec_transposed(const Matrix& m, std::span<const double> v);

double dot(std::span<const double> a, std::span<const double> b);

// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

bool all_finite(std::span<const double> values);

}  // namespace miplkit

#endif  // MIPLKIT_MATRIX_HPP
