// Copyright 2026 The SparseGrid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace sparsegrid {

/// Entries carrying this value are outside the domain of a masked operation.
inline constexpr float kExcluded = -std::numeric_limits<float>::infinity();

/// Dense row-major matrix of 32-bit reals.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, float fill = 0.0f)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  /// Takes ownership of `data`; throws ShapeError unless data.size() == rows * cols.
  Matrix(std::size_t rows, std::size_t cols, std::vector<float> data);

  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  float& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  float operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<float> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const float> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<float> data_;
};

/// Dense row-major boolean matrix.
class BoolMatrix {
 public:
  BoolMatrix() = default;
  BoolMatrix(std::size_t rows, std::size_t cols, bool fill = false)
      : rows_(rows), cols_(cols), data_(rows * cols, fill ? 1 : 0) {}

  /// Lower-triangular (j <= i) mask.
  static BoolMatrix causal(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  bool operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c] != 0; }
  void set(std::size_t r, std::size_t c, bool v = true) { data_[r * cols_ + c] = v ? 1 : 0; }

  std::span<const std::uint8_t> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::size_t count() const noexcept;
  std::size_t count_row(std::size_t r) const noexcept;

  /// True when every set entry of *this is also set in `other`.
  bool subset_of(const BoolMatrix& other) const;

  friend bool operator==(const BoolMatrix&, const BoolMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::uint8_t> data_;
};

/// out = a * b^T. Products accumulate in 64-bit in ascending k order.
Matrix matmul_transposed(const Matrix& a, const Matrix& b);

/// Row-wise softmax restricted to `allowed` entries; disallowed outputs are 0.
/// Throws DegenerateRowError for a row with nothing allowed.
Matrix masked_row_softmax(const Matrix& logits, const BoolMatrix& allowed);

/// Same as above for one row. Excluded entries are written as 0.
void masked_softmax_row(std::span<const float> logits,
                        std::span<const std::uint8_t> allowed,
                        std::span<float> out, std::size_t row_index = 0);

/// Frobenius norm of a - b, accumulated in 64-bit.
double frobenius_diff(const Matrix& a, const Matrix& b);
double frobenius_norm(const Matrix& a);

/// Candidates in descending value order, ties to the smaller index.
std::vector<std::size_t> descending_order(std::span<const float> values);

/// Length of the shortest prefix of `order` whose cumulative value reaches
/// `fraction` of the total taken over the whole order. Sums run in order, in
/// 64-bit, so the full prefix always reaches the total. Returns 0 when the
/// total is zero.
std::size_t minimal_mass_prefix(std::span<const float> values,
                                std::span<const std::size_t> order,
                                double fraction);

}  // namespace sparsegrid
