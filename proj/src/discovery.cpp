// Copyright 2026 The SparseGrid Authors
// SPDX-License-Identifier: Apache-2.0

#include "sparsegrid/discovery.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sparsegrid/errors.hpp"

namespace sparsegrid {

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::kHeadRoundRobin: return "head-rr";
    case Strategy::kLayerRoundRobin: return "layer-rr";
    case Strategy::kHybridRoundRobin: return "hybrid-rr";
    case Strategy::kFixed: return "fixed";
    case Strategy::kAntiDiagonal: return "anti-diagonal";
  }
  return "unknown";
}

std::optional<Strategy> parse_strategy(std::string_view name) {
  for (Strategy s : {Strategy::kHeadRoundRobin, Strategy::kLayerRoundRobin,
                     Strategy::kHybridRoundRobin, Strategy::kFixed, Strategy::kAntiDiagonal}) {
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

std::optional<Protection> parse_protection(std::string_view name) {
  if (name == "last-q-block") return Protection::kLastQueryBlock;
  if (name == "sink") return Protection::kSink;
  if (name == "recent") return Protection::kRecent;
  return std::nullopt;
}

std::vector<std::string> protection_names(Protection p) {
  std::vector<std::string> names;
  if (has(p, Protection::kLastQueryBlock)) names.emplace_back("last-q-block");
  if (has(p, Protection::kSink)) names.emplace_back("sink");
  if (has(p, Protection::kRecent)) names.emplace_back("recent");
  return names;
}

void DiscoveryConfig::validate() const {
  if (stride == 0) throw ParamError("stride must be >= 1");
  if (block_size < stride || block_size % stride != 0) {
    throw ParamError("block size " + std::to_string(block_size) +
                     " must be a positive multiple of stride " + std::to_string(stride));
  }
  if (!(tau > 0.0 && tau <= 1.0)) {
    throw ParamError("tau must lie in (0, 1], got " + std::to_string(tau));
  }
}

std::size_t sample_position(std::size_t i, std::size_t h, std::size_t stride,
                            std::optional<std::size_t> seq_len) {
  std::size_t pos = i * stride + (stride - 1 - (h % stride));
  if (seq_len && *seq_len > 0) pos = std::min(pos, *seq_len - 1);
  return pos;
}

std::vector<std::size_t> sample_positions_for_strategy(const DiscoveryConfig& cfg,
                                                       std::size_t num_strides,
                                                       std::optional<std::size_t> seq_len) {
  std::size_t rotation = 0;
  switch (cfg.strategy) {
    case Strategy::kHeadRoundRobin: rotation = cfg.head_index; break;
    case Strategy::kLayerRoundRobin: rotation = cfg.layer_index; break;
    case Strategy::kHybridRoundRobin: rotation = cfg.head_index + cfg.layer_index; break;
    case Strategy::kFixed:
    case Strategy::kAntiDiagonal: rotation = 0; break;
  }
  std::vector<std::size_t> positions(num_strides);
  for (std::size_t i = 0; i < num_strides; ++i) {
    positions[i] = sample_position(i, rotation, cfg.stride, seq_len);
  }
  return positions;
}

namespace {

double stride_scale(std::size_t stride, std::size_t head_dim) {
  return 1.0 / (static_cast<double>(stride) * std::sqrt(static_cast<double>(head_dim)));
}

}  // namespace

StrideScores stride_importance(const HeadTensors& t, std::span<const std::size_t> positions,
                               const DiscoveryConfig& cfg) {
  const std::size_t L = t.seq_len();
  const std::size_t d = t.head_dim();
  const std::size_t S = cfg.stride;
  if (S == 0) throw ParamError("stride must be >= 1");
  const std::size_t ns = ceil_div(L, S);
  if (positions.size() != ns) {
    throw IndexError("expected " + std::to_string(ns) + " sampled positions, got " +
                     std::to_string(positions.size()));
  }
  for (std::size_t i = 0; i < ns; ++i) {
    const std::size_t p = positions[i];
    if (p >= L || p < i * S || p >= (i + 1) * S) {
      throw IndexError("sampled position " + std::to_string(p) + " lies outside stride " +
                       std::to_string(i) + " of a " + std::to_string(L) + "-token sequence");
    }
  }

  // Key sums per stride, tail stride holding only in-range keys.
  std::vector<double> key_sums(ns * d, 0.0);
  for (std::size_t j = 0; j < ns; ++j) {
    double* sum = key_sums.data() + j * d;
    const std::size_t end = std::min((j + 1) * S, L);
    for (std::size_t k = j * S; k < end; ++k) {
      const float* kr = t.k().row(k).data();
      for (std::size_t c = 0; c < d; ++c) sum[c] += kr[c];
    }
  }

  const double scale = stride_scale(S, d);
  StrideScores scores{Matrix(ns, ns, kExcluded), 0};
  for (std::size_t i = 0; i < ns; ++i) {
    const float* q = t.q().row(positions[i]).data();
    const std::size_t horizon = positions[i] / S;
    for (std::size_t j = 0; j <= horizon; ++j) {
      const double* sum = key_sums.data() + j * d;
      double dot = 0.0;
      for (std::size_t c = 0; c < d; ++c) dot += static_cast<double>(q[c]) * sum[c];
      scores.raw(i, j) = static_cast<float>(dot * scale);
      ++scores.dot_products;
    }
  }
  return scores;
}

StrideScores anti_diagonal_importance(const HeadTensors& t, const DiscoveryConfig& cfg) {
  const std::size_t L = t.seq_len();
  const std::size_t d = t.head_dim();
  const std::size_t S = cfg.stride;
  if (S == 0) throw ParamError("stride must be >= 1");
  const std::size_t ns = ceil_div(L, S);
  const double scale = stride_scale(S, d);
  StrideScores scores{Matrix(ns, ns, kExcluded), 0};
  for (std::size_t i = 0; i < ns; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double acc = 0.0;
      for (std::size_t r = 0; r < S; ++r) {
        const std::size_t qi = i * S + r;
        const std::size_t kj = j * S + (S - 1 - r);
        if (qi >= L || kj >= L) continue;
        const float* q = t.q().row(qi).data();
        const float* k = t.k().row(kj).data();
        double dot = 0.0;
        for (std::size_t c = 0; c < d; ++c) dot += static_cast<double>(q[c]) * k[c];
        acc += dot;
        ++scores.dot_products;
      }
      scores.raw(i, j) = static_cast<float>(acc * scale);
    }
  }
  return scores;
}

Matrix normalize_importance(const Matrix& raw) {
  BoolMatrix allowed(raw.rows(), raw.cols());
  for (std::size_t i = 0; i < raw.rows(); ++i)
    for (std::size_t j = 0; j < raw.cols(); ++j)
      if (raw(i, j) != kExcluded) allowed.set(i, j);
  return masked_row_softmax(raw, allowed);
}

Matrix block_importance(const Matrix& normalized, const DiscoveryConfig& cfg) {
  if (cfg.stride == 0 || cfg.block_size % cfg.stride != 0) {
    throw ParamError("block size must be a multiple of stride");
  }
  if (normalized.rows() != normalized.cols()) throw ShapeError("importance map must be square");
  const std::size_t per_block = cfg.block_size / cfg.stride;
  const std::size_t ns = normalized.rows();
  const std::size_t nb = ceil_div(ns, per_block);
  Matrix blocks(nb, nb);
  for (std::size_t m = 0; m < nb; ++m) {
    const std::size_t i_end = std::min((m + 1) * per_block, ns);
    for (std::size_t n = 0; n <= m; ++n) {
      const std::size_t j_end = std::min((n + 1) * per_block, ns);
      double acc = 0.0;
      for (std::size_t i = m * per_block; i < i_end; ++i)
        for (std::size_t j = n * per_block; j < j_end; ++j) acc += normalized(i, j);
      blocks(m, n) = static_cast<float>(acc);
    }
  }
  return blocks;
}

TopTauRow select_top_tau(std::span<const float> block_scores_row, std::size_t query_block,
                         double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) throw ParamError("tau must lie in (0, 1]");
  if (query_block >= block_scores_row.size()) {
    throw IndexError("query block " + std::to_string(query_block) + " outside row of " +
                     std::to_string(block_scores_row.size()));
  }
  TopTauRow row;
  row.selected.assign(block_scores_row.size(), 0);
  auto causal = block_scores_row.first(query_block + 1);
  const auto order = descending_order(causal);
  std::size_t keep = minimal_mass_prefix(causal, order, tau);
  if (keep == 0) {
    row.selected[query_block] = 1;
    row.fallback = true;
    return row;
  }
  if (tau >= 1.0) keep = order.size();
  for (std::size_t k = 0; k < keep; ++k) row.selected[order[k]] = 1;
  return row;
}

BoolMatrix static_protection(std::size_t num_blocks, Protection modes) {
  BoolMatrix mask(num_blocks, num_blocks);
  if (num_blocks == 0) return mask;
  if (has(modes, Protection::kLastQueryBlock)) {
    for (std::size_t n = 0; n < num_blocks; ++n) mask.set(num_blocks - 1, n);
  }
  for (std::size_t m = 0; m < num_blocks; ++m) {
    if (has(modes, Protection::kSink)) mask.set(m, 0);
    if (has(modes, Protection::kRecent)) {
      mask.set(m, m);
      if (m > 0) mask.set(m, m - 1);
    }
  }
  return mask;
}

DiscoveryResult discover(const HeadTensors& t, const DiscoveryConfig& cfg) {
  cfg.validate();
  const std::size_t L = t.seq_len();
  const std::size_t ns = ceil_div(L, cfg.stride);

  DiscoveryResult result;
  StrideScores scores;
  if (cfg.strategy == Strategy::kAntiDiagonal) {
    scores = anti_diagonal_importance(t, cfg);
  } else {
    result.positions = sample_positions_for_strategy(cfg, ns, L);
    scores = stride_importance(t, result.positions, cfg);
  }
  result.cost.search_ops = scores.dot_products;
  result.importance.raw = std::move(scores.raw);
  result.importance.normalized = normalize_importance(result.importance.raw);
  result.importance.block_scores = block_importance(result.importance.normalized, cfg);

  std::string tag(to_string(cfg.strategy));
  result.selection = BlockSelection::empty(L, cfg.block_size, std::move(tag));
  result.selection.tau = cfg.tau;
  const std::size_t nb = result.selection.num_blocks();
  const BoolMatrix protect = static_protection(nb, cfg.protection);
  for (std::size_t m = 0; m < nb; ++m) {
    const TopTauRow row = select_top_tau(result.importance.block_scores.row(m), m, cfg.tau);
    if (row.fallback) result.fallback_rows.push_back(m);
    for (std::size_t n = 0; n <= m; ++n) {
      if (row.selected[n] || protect(m, n)) result.selection.blocks.set(m, n);
    }
  }
  fill_sparsity(result.selection, result.cost);
  return result;
}

}  // namespace sparsegrid
