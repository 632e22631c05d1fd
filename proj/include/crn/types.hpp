#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace crn {

using CuIndex = std::size_t;
using ApIndex = std::size_t;
using ChannelIndex = std::size_t;

struct Point {
  double x = 0.0;
  double y = 0.0;
};

// Dense row-major matrix. Rows are CUs, columns are global channel indices.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) {
    assert(r < rows_ && c < cols_);
    return data_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    assert(r < rows_ && c < cols_);
    return data_[r * cols_ + c];
  }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  const std::vector<double>& data() const { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Entry i is the AP that CU i is associated with (0-based internally;
// every external format prints 1-based AP ids).
using AssociationProfile = std::vector<ApIndex>;

// N x K powers p_i(k); row i is nonzero only on channels of its AP.
using PowerProfile = Matrix;

}  // namespace crn
