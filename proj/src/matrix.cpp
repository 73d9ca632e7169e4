// Copyright 2026 The SparseGrid Authors
// SPDX-License-Identifier: Apache-2.0

#include "sparsegrid/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "sparsegrid/errors.hpp"

namespace sparsegrid {

namespace {

std::string shape_str(std::size_t r, std::size_t c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<float> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw ShapeError("matrix data length " + std::to_string(data_.size()) +
                     " does not match shape " + shape_str(rows, cols));
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0f;
  return m;
}

BoolMatrix BoolMatrix::causal(std::size_t n) {
  BoolMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) m.set(i, j);
  return m;
}

std::size_t BoolMatrix::count() const noexcept {
  return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), std::uint8_t{1}));
}

std::size_t BoolMatrix::count_row(std::size_t r) const noexcept {
  auto row_view = row(r);
  return static_cast<std::size_t>(std::count(row_view.begin(), row_view.end(), std::uint8_t{1}));
}

bool BoolMatrix::subset_of(const BoolMatrix& other) const {
  if (rows_ != other.rows_ || cols_ != other.cols_) {
    throw ShapeError("subset_of: shape " + shape_str(rows_, cols_) + " vs " +
                     shape_str(other.rows_, other.cols_));
  }
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (data_[i] && !other.data_[i]) return false;
  }
  return true;
}

Matrix matmul_transposed(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_transposed: inner dimensions differ (" +
                     shape_str(a.rows(), a.cols()) + " vs " + shape_str(b.rows(), b.cols()) + ")");
  }
  Matrix out(a.rows(), b.rows());
  const std::size_t d = a.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const float* ar = a.row(i).data();
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const float* br = b.row(j).data();
      double acc = 0.0;
      for (std::size_t k = 0; k < d; ++k) acc += static_cast<double>(ar[k]) * br[k];
      out(i, j) = static_cast<float>(acc);
    }
  }
  return out;
}

void masked_softmax_row(std::span<const float> logits, std::span<const std::uint8_t> allowed,
                        std::span<float> out, std::size_t row_index) {
  const std::size_t n = logits.size();
  double max_logit = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t j = 0; j < n; ++j) {
    if (!allowed[j]) continue;
    any = true;
    max_logit = std::max(max_logit, static_cast<double>(logits[j]));
  }
  if (!any) {
    throw DegenerateRowError(row_index, "softmax row " + std::to_string(row_index) +
                                            " has no allowed entry");
  }
  double denom = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    if (allowed[j]) denom += std::exp(static_cast<double>(logits[j]) - max_logit);
  }
  for (std::size_t j = 0; j < n; ++j) {
    out[j] = allowed[j]
                 ? static_cast<float>(std::exp(static_cast<double>(logits[j]) - max_logit) / denom)
                 : 0.0f;
  }
}

Matrix masked_row_softmax(const Matrix& logits, const BoolMatrix& allowed) {
  if (logits.rows() != allowed.rows() || logits.cols() != allowed.cols()) {
    throw ShapeError("masked_row_softmax: logits " + shape_str(logits.rows(), logits.cols()) +
                     " vs mask " + shape_str(allowed.rows(), allowed.cols()));
  }
  Matrix out(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    masked_softmax_row(logits.row(i), allowed.row(i), out.row(i), i);
  }
  return out;
}

double frobenius_diff(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError("frobenius_diff: " + shape_str(a.rows(), a.cols()) + " vs " +
                     shape_str(b.rows(), b.cols()));
  }
  auto da = a.data();
  auto db = b.data();
  double acc = 0.0;
  for (std::size_t i = 0; i < da.size(); ++i) {
    const double diff = static_cast<double>(da[i]) - static_cast<double>(db[i]);
    acc += diff * diff;
  }
  return std::sqrt(acc);
}

double frobenius_norm(const Matrix& a) {
  double acc = 0.0;
  for (float x : a.data()) acc += static_cast<double>(x) * x;
  return std::sqrt(acc);
}

std::vector<std::size_t> descending_order(std::span<const float> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return values[x] > values[y]; });
  return order;
}

std::size_t minimal_mass_prefix(std::span<const float> values, std::span<const std::size_t> order,
                                double fraction) {
  double total = 0.0;
  for (std::size_t idx : order) total += values[idx];
  if (total <= 0.0) return 0;
  const double target = fraction * total;
  double cumulative = 0.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    cumulative += values[order[k]];
    if (cumulative >= target) return k + 1;
  }
  return order.size();
}

}  // namespace sparsegrid
