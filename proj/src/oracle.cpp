// Copyright 2026 The SparseGrid Authors
// SPDX-License-Identifier: Apache-2.0

#include "sparsegrid/oracle.hpp"

#include <algorithm>
#include <string>

#include "sparsegrid/errors.hpp"
#include "sparsegrid/matrix.hpp"

namespace sparsegrid {

BoolMatrix GroundTruth::block_mask() const {
  BoolMatrix mask(block_truth.size(), block_truth.size());
  for (std::size_t m = 0; m < block_truth.size(); ++m)
    for (std::size_t n : block_truth[m]) mask.set(m, n);
  return mask;
}

GroundTruth ground_truth_from_probabilities(const Matrix& probs, double tau_star,
                                            std::size_t block_size) {
  if (!(tau_star > 0.0 && tau_star <= 1.0)) throw ParamError("tau_star must lie in (0, 1]");
  if (probs.rows() != probs.cols()) throw ShapeError("attention matrix must be square");
  GroundTruth truth;
  truth.tau_star = tau_star;
  truth.key_sets.resize(probs.rows());
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    auto causal = probs.row(i).first(i + 1);
    const auto order = descending_order(causal);
    const std::size_t keep = minimal_mass_prefix(causal, order, tau_star);
    auto& keys = truth.key_sets[i];
    keys.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep));
    std::sort(keys.begin(), keys.end());
  }
  if (block_size > 0) compute_block_truth(truth, block_size);
  return truth;
}

GroundTruth ground_truth_sets(const HeadTensors& t, double tau_star, std::size_t block_size) {
  const Matrix probs = attention_probabilities(t, BoolMatrix::causal(t.seq_len()));
  return ground_truth_from_probabilities(probs, tau_star, block_size);
}

void compute_block_truth(GroundTruth& truth, std::size_t block_size) {
  if (block_size == 0) throw ParamError("block size must be >= 1");
  const std::size_t L = truth.seq_len();
  const std::size_t nb = ceil_div(L, block_size);
  BoolMatrix mask(nb, nb);
  for (std::size_t i = 0; i < L; ++i)
    for (std::size_t key : truth.key_sets[i]) mask.set(i / block_size, key / block_size);
  truth.block_size = block_size;
  truth.block_truth.assign(nb, {});
  for (std::size_t m = 0; m < nb; ++m)
    for (std::size_t n = 0; n < nb; ++n)
      if (mask(m, n)) truth.block_truth[m].push_back(n);
}

std::vector<std::size_t> predicted_key_set(const BlockSelection& sel, std::size_t query) {
  if (query >= sel.seq_len) {
    throw IndexError("query " + std::to_string(query) + " outside sequence of " +
                     std::to_string(sel.seq_len));
  }
  const std::size_t B = sel.block_size;
  const std::size_t m = query / B;
  std::vector<std::size_t> keys;
  for (std::size_t n = 0; n <= m; ++n) {
    if (!sel.blocks(m, n)) continue;
    const std::size_t end = std::min({(n + 1) * B, sel.seq_len, query + 1});
    for (std::size_t j = n * B; j < end; ++j) keys.push_back(j);
  }
  return keys;
}

SelectionReport score_selection(const BlockSelection& sel, const GroundTruth& truth) {
  sel.check_shape();
  if (truth.seq_len() != sel.seq_len) {
    throw ShapeError("ground truth covers " + std::to_string(truth.seq_len()) +
                     " queries, selection covers " + std::to_string(sel.seq_len));
  }
  if (truth.block_size != 0 && truth.block_size != sel.block_size) {
    throw ShapeError("ground truth block size " + std::to_string(truth.block_size) +
                     " differs from selection block size " + std::to_string(sel.block_size));
  }
  SelectionReport report;
  const std::size_t L = sel.seq_len;
  report.per_query.resize(L);
  double precision_sum = 0.0;
  double recall_sum = 0.0;
  for (std::size_t i = 0; i < L; ++i) {
    const auto predicted = predicted_key_set(sel, i);
    const auto& expected = truth.key_sets[i];
    if (predicted.empty()) {
      throw DegenerateRowError(i, "query " + std::to_string(i) + " has an empty predicted key set");
    }
    std::vector<std::size_t> common;
    std::set_intersection(predicted.begin(), predicted.end(), expected.begin(), expected.end(),
                          std::back_inserter(common));
    QueryScore& q = report.per_query[i];
    q.predicted = predicted.size();
    q.truth = expected.size();
    q.hits = common.size();
    q.precision = static_cast<double>(q.hits) / static_cast<double>(q.predicted);
    q.recall = q.truth == 0 ? 1.0 : static_cast<double>(q.hits) / static_cast<double>(q.truth);
    precision_sum += q.precision;
    recall_sum += q.recall;
  }
  if (L > 0) {
    report.precision = precision_sum / static_cast<double>(L);
    report.recall = recall_sum / static_cast<double>(L);
  }
  const double denom = report.precision + report.recall;
  report.f1 = denom > 0.0 ? 2.0 * report.precision * report.recall / denom : 0.0;
  return report;
}

}  // namespace sparsegrid
