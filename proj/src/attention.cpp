// Copyright 2026 The SparseGrid Authors
// SPDX-License-Identifier: Apache-2.0

#include "sparsegrid/attention.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "sparsegrid/errors.hpp"

namespace sparsegrid {

HeadTensors::HeadTensors(Matrix q, Matrix k, Matrix v)
    : q_(std::move(q)), k_(std::move(k)), v_(std::move(v)) {
  if (q_.rows() == 0 || q_.cols() == 0) throw ShapeError("HeadTensors: empty query matrix");
  if (k_.rows() != q_.rows() || k_.cols() != q_.cols() || v_.rows() != q_.rows() ||
      v_.cols() != q_.cols()) {
    throw ShapeError("HeadTensors: q, k, v must share one L x d shape");
  }
}

BlockSelection BlockSelection::all_causal(std::size_t seq_len, std::size_t block_size,
                                          std::string tag) {
  BlockSelection sel = empty(seq_len, block_size, std::move(tag));
  sel.blocks = BoolMatrix::causal(sel.blocks.rows());
  return sel;
}

BlockSelection BlockSelection::empty(std::size_t seq_len, std::size_t block_size,
                                     std::string tag) {
  if (block_size == 0) throw ParamError("block size must be >= 1");
  const std::size_t nb = ceil_div(seq_len, block_size);
  return BlockSelection{BoolMatrix(nb, nb), block_size, seq_len, std::move(tag), 1.0};
}

void BlockSelection::check_shape() const {
  if (block_size == 0) throw ParamError("block size must be >= 1");
  const std::size_t nb = ceil_div(seq_len, block_size);
  if (blocks.rows() != nb || blocks.cols() != nb) {
    throw ShapeError("block selection is " + std::to_string(blocks.rows()) + "x" +
                     std::to_string(blocks.cols()) + ", expected " + std::to_string(nb) +
                     " blocks per side");
  }
  for (std::size_t m = 0; m < nb; ++m)
    for (std::size_t n = m + 1; n < nb; ++n)
      if (blocks(m, n)) {
        throw ParamError("block selection violates causality at (" + std::to_string(m) + ", " +
                         std::to_string(n) + ")");
      }
}

BoolMatrix expand_block_mask(const BlockSelection& sel) {
  sel.check_shape();
  const std::size_t L = sel.seq_len;
  const std::size_t B = sel.block_size;
  BoolMatrix mask(L, L);
  for (std::size_t i = 0; i < L; ++i) {
    const std::size_t m = i / B;
    for (std::size_t n = 0; n <= m; ++n) {
      if (!sel.blocks(m, n)) continue;
      const std::size_t end = std::min((n + 1) * B, i + 1);
      for (std::size_t j = n * B; j < end; ++j) mask.set(i, j);
    }
  }
  return mask;
}

namespace {

// Shared by the dense and sparse paths so both produce identical bits.
Matrix attend(const HeadTensors& t, const BoolMatrix& mask, std::uint64_t* logit_ops) {
  const std::size_t L = t.seq_len();
  const std::size_t d = t.head_dim();
  if (mask.rows() != L || mask.cols() != L) throw ShapeError("attention mask must be L x L");
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));

  Matrix out(L, d);
  std::vector<float> logits(L);
  std::vector<float> probs(L);
  std::vector<double> acc(d);
  std::uint64_t ops = 0;
  for (std::size_t i = 0; i < L; ++i) {
    auto allowed = mask.row(i);
    const float* qi = t.q().row(i).data();
    for (std::size_t j = 0; j < L; ++j) {
      if (!allowed[j]) {
        logits[j] = 0.0f;
        continue;
      }
      const float* kj = t.k().row(j).data();
      double dot = 0.0;
      for (std::size_t c = 0; c < d; ++c) dot += static_cast<double>(qi[c]) * kj[c];
      logits[j] = static_cast<float>(dot * scale);
      ++ops;
    }
    masked_softmax_row(logits, allowed, probs, i);
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t j = 0; j < L; ++j) {
      if (!allowed[j]) continue;
      const double p = probs[j];
      const float* vj = t.v().row(j).data();
      for (std::size_t c = 0; c < d; ++c) acc[c] += p * vj[c];
    }
    for (std::size_t c = 0; c < d; ++c) out(i, c) = static_cast<float>(acc[c]);
  }
  if (logit_ops) *logit_ops = ops;
  return out;
}

}  // namespace

Matrix attention_probabilities(const HeadTensors& t, const BoolMatrix& mask) {
  const std::size_t L = t.seq_len();
  const std::size_t d = t.head_dim();
  if (mask.rows() != L || mask.cols() != L) throw ShapeError("attention mask must be L x L");
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  Matrix logits(L, L);
  for (std::size_t i = 0; i < L; ++i) {
    const float* qi = t.q().row(i).data();
    for (std::size_t j = 0; j < L; ++j) {
      if (!mask(i, j)) continue;
      const float* kj = t.k().row(j).data();
      double dot = 0.0;
      for (std::size_t c = 0; c < d; ++c) dot += static_cast<double>(qi[c]) * kj[c];
      logits(i, j) = static_cast<float>(dot * scale);
    }
  }
  return masked_row_softmax(logits, mask);
}

Matrix full_attention(const HeadTensors& t) {
  return attend(t, BoolMatrix::causal(t.seq_len()), nullptr);
}

AttentionResult sparse_attention(const HeadTensors& t, const BlockSelection& sel) {
  if (sel.seq_len != t.seq_len()) {
    throw ShapeError("selection covers " + std::to_string(sel.seq_len) +
                     " tokens, tensors have " + std::to_string(t.seq_len()));
  }
  const BoolMatrix mask = expand_block_mask(sel);
  for (std::size_t i = 0; i < mask.rows(); ++i) {
    if (mask.count_row(i) == 0) {
      throw DegenerateRowError(i, "query " + std::to_string(i) + " has no selected key");
    }
  }
  AttentionResult result;
  result.out = attend(t, mask, &result.cost.logit_ops);
  fill_sparsity(sel, result.cost);
  return result;
}

double approximation_error(const Matrix& full_out, const Matrix& sparse_out) {
  return frobenius_diff(full_out, sparse_out);
}

void fill_sparsity(const BlockSelection& sel, CostReport& cost) {
  const std::size_t nb = sel.blocks.rows();
  std::uint64_t selected = 0;
  for (std::size_t m = 0; m < nb; ++m)
    for (std::size_t n = 0; n <= m && n < sel.blocks.cols(); ++n)
      if (sel.blocks(m, n)) ++selected;
  cost.selected_causal_pairs = selected;
  cost.total_causal_pairs = static_cast<std::uint64_t>(nb) * (nb + 1) / 2;
  cost.sparsity = cost.total_causal_pairs == 0
                      ? 0.0
                      : 1.0 - static_cast<double>(selected) /
                                  static_cast<double>(cost.total_causal_pairs);
}

double sparsity_of(const BlockSelection& sel) {
  CostReport cost;
  fill_sparsity(sel, cost);
  return cost.sparsity;
}

}  // namespace sparsegrid
