// Copyright 2026 The SparseGrid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "sparsegrid/attention.hpp"

namespace sparsegrid {

/// Per-query important key sets taken from full causal attention.
struct GroundTruth {
  std::vector<std::vector<std::size_t>> key_sets;  // sorted token indices, one set per query
  double tau_star = 0.95;
  std::size_t block_size = 0;
  /// Per query block: sorted key blocks intersecting any key set of the block.
  std::vector<std::vector<std::size_t>> block_truth;

  std::size_t seq_len() const noexcept { return key_sets.size(); }

  /// block_truth as an N_b x N_b mask.
  BoolMatrix block_mask() const;
};

struct QueryScore {
  double precision = 0.0;
  double recall = 0.0;
  std::size_t predicted = 0;
  std::size_t truth = 0;
  std::size_t hits = 0;
};

struct SelectionReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::vector<QueryScore> per_query;
};

/// For every query i, the fewest keys (sorted by descending attention, ties to
/// the smaller index) whose mass reaches tau_star of the row's total.
/// Block truth is computed for `block_size` (0 skips it).
GroundTruth ground_truth_sets(const HeadTensors& t, double tau_star, std::size_t block_size = 0);

/// Same, from an already computed causal attention matrix.
GroundTruth ground_truth_from_probabilities(const Matrix& probs, double tau_star,
                                            std::size_t block_size = 0);

/// Fills `truth.block_truth` for a block size.
void compute_block_truth(GroundTruth& truth, std::size_t block_size);

/// Tokens of the selected key blocks for query i's block, clipped to j <= i.
std::vector<std::size_t> predicted_key_set(const BlockSelection& sel, std::size_t query);

/// Mean precision and recall over queries; F1 from the two means.
SelectionReport score_selection(const BlockSelection& sel, const GroundTruth& truth);

}  // namespace sparsegrid
