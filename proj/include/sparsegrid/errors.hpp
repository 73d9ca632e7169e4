// Copyright 2026 The SparseGrid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sparsegrid {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A softmax row (or attention query) has no admissible entry.
class DegenerateRowError : public Error {
 public:
  DegenerateRowError(std::size_t row, const std::string& what)
      : Error(what), row_(row) {}

  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or generator parameters.
class ParamError : public Error {
 public:
  using Error::Error;
};

/// Malformed tensor file. `offset()` is the byte offset of the bad field.
class FormatError : public Error {
 public:
  FormatError(std::size_t offset, const std::string& what)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Invalid experiment configuration document.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Numeric failure inside one (layer, head) work item.
class NumericError : public Error {
 public:
  NumericError(std::size_t layer, std::size_t head, const std::string& what)
      : Error("layer " + std::to_string(layer) + ", head " + std::to_string(head) + ": " + what),
        layer_(layer),
        head_(head) {}

  std::size_t layer() const noexcept { return layer_; }
  std::size_t head() const noexcept { return head_; }

 private:
  std::size_t layer_;
  std::size_t head_;
};

}  // namespace sparsegrid
