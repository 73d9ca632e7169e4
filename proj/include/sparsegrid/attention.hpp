// Copyright 2026 The SparseGrid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "sparsegrid/matrix.hpp"

namespace sparsegrid {

/// Per-head Q/K/V, each L x d.
class HeadTensors {
 public:
  HeadTensors() = default;
  /// Throws ShapeError unless q, k, v share an L x d shape with L, d >= 1.
  HeadTensors(Matrix q, Matrix k, Matrix v);

  const Matrix& q() const noexcept { return q_; }
  const Matrix& k() const noexcept { return k_; }
  const Matrix& v() const noexcept { return v_; }
  Matrix& q() noexcept { return q_; }
  Matrix& k() noexcept { return k_; }
  Matrix& v() noexcept { return v_; }

  std::size_t seq_len() const noexcept { return q_.rows(); }
  std::size_t head_dim() const noexcept { return q_.cols(); }

  friend bool operator==(const HeadTensors&, const HeadTensors&) = default;

 private:
  Matrix q_;
  Matrix k_;
  Matrix v_;
};

inline std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

/// Block-level selection matrix over an L-token sequence split into
/// ceil(L / block_size) blocks. Row = query block, column = key block.
struct BlockSelection {
  BoolMatrix blocks;
  std::size_t block_size = 1;
  std::size_t seq_len = 0;
  std::string strategy_tag;
  double tau = 1.0;

  std::size_t num_blocks() const noexcept { return blocks.rows(); }

  /// Every causal block pair selected.
  static BlockSelection all_causal(std::size_t seq_len, std::size_t block_size,
                                   std::string tag = "dense");
  /// Empty (all false) selection of the right shape.
  static BlockSelection empty(std::size_t seq_len, std::size_t block_size, std::string tag = "");

  /// Throws ShapeError on wrong grid size and ParamError on an upper-triangle
  /// entry. Rows with no selected block are caught later by sparse_attention.
  void check_shape() const;
};

struct CostReport {
  std::uint64_t logit_ops = 0;   // query-key dot products executed
  std::uint64_t search_ops = 0;  // stride-level dot products during discovery
  double sparsity = 0.0;
  std::uint64_t selected_causal_pairs = 0;
  std::uint64_t total_causal_pairs = 0;
};

struct AttentionResult {
  Matrix out;
  CostReport cost;
};

/// Token-level causal mask expanded from a block selection.
BoolMatrix expand_block_mask(const BlockSelection& sel);

/// Row-softmax of Q K^T / sqrt(d) over the allowed entries of `mask`.
Matrix attention_probabilities(const HeadTensors& t, const BoolMatrix& mask);

/// Causal softmax(Q K^T / sqrt(d)) V.
Matrix full_attention(const HeadTensors& t);

/// Attention restricted to the expanded block mask. Masked pairs are dropped
/// from the softmax domain rather than zeroed. Throws DegenerateRowError
/// naming the first query with no admissible key.
AttentionResult sparse_attention(const HeadTensors& t, const BlockSelection& sel);

double approximation_error(const Matrix& full_out, const Matrix& sparse_out);

/// 1 - selected / (N_b (N_b + 1) / 2), counting causal pairs only.
double sparsity_of(const BlockSelection& sel);

/// Fills the selection counts and sparsity of `cost` from `sel`.
void fill_sparsity(const BlockSelection& sel, CostReport& cost);

}  // namespace sparsegrid
