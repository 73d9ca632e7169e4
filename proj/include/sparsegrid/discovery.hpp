// Copyright 2026 The SparseGrid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sparsegrid/attention.hpp"
#include "sparsegrid/matrix.hpp"

namespace sparsegrid {

/// How the representative query inside each stride is chosen.
enum class Strategy {
  kHeadRoundRobin,   // offset rotates with the head index
  kLayerRoundRobin,  // offset rotates with the layer index
  kHybridRoundRobin, // offset rotates with (head + layer)
  kFixed,            // offset S - 1 for every head (no rotation)
  kAntiDiagonal,     // no sampling; anti-diagonal stride scoring
};

std::string_view to_string(Strategy s);
/// Accepts "head-rr", "layer-rr", "hybrid-rr", "fixed", "anti-diagonal".
std::optional<Strategy> parse_strategy(std::string_view name);

/// Bit set of statically protected block families.
enum class Protection : unsigned {
  kNone = 0,
  kLastQueryBlock = 1u << 0,
  kSink = 1u << 1,
  kRecent = 1u << 2,
};

constexpr Protection operator|(Protection a, Protection b) {
  return static_cast<Protection>(static_cast<unsigned>(a) | static_cast<unsigned>(b));
}
constexpr bool has(Protection set, Protection flag) {
  return (static_cast<unsigned>(set) & static_cast<unsigned>(flag)) != 0;
}
/// Accepts "last-q-block", "sink", "recent".
std::optional<Protection> parse_protection(std::string_view name);
std::vector<std::string> protection_names(Protection p);

struct DiscoveryConfig {
  std::size_t stride = 8;
  std::size_t block_size = 64;
  double tau = 0.9;
  Strategy strategy = Strategy::kHeadRoundRobin;
  Protection protection = Protection::kLastQueryBlock;
  std::size_t head_index = 0;
  std::size_t layer_index = 0;
  std::size_t num_heads = 1;

  /// Throws ParamError unless 1 <= stride <= block_size, block_size % stride
  /// == 0 and tau in (0, 1].
  void validate() const;
};

/// Stride-level importance (I), its row softmax (P) and block aggregates (S).
struct ImportanceMap {
  Matrix raw;           // N_s x N_s; non-causal entries hold kExcluded
  Matrix normalized;    // N_s x N_s; rows sum to 1 over causal strides
  Matrix block_scores;  // N_b x N_b; zero above the diagonal
};

/// Raw stride scores plus the number of dot products spent building them.
struct StrideScores {
  Matrix raw;
  std::uint64_t dot_products = 0;
};

/// Sampled query position for stride `i` and rotation index `h`:
/// i*S + (S - 1 - h mod S), clamped to seq_len - 1 when a length is given.
std::size_t sample_position(std::size_t i, std::size_t h, std::size_t stride,
                            std::optional<std::size_t> seq_len = std::nullopt);

/// One sampled position per stride for the configured strategy. The
/// anti-diagonal strategy has no sampled query; it reports the stride's last
/// position, which is also its causal horizon.
std::vector<std::size_t> sample_positions_for_strategy(
    const DiscoveryConfig& cfg, std::size_t num_strides,
    std::optional<std::size_t> seq_len = std::nullopt);

/// raw[i][j] = q[pos_i] . (sum of keys in stride j) / (S sqrt(d)) for
/// j <= pos_i / S. Throws IndexError for a position outside its stride.
StrideScores stride_importance(const HeadTensors& t, std::span<const std::size_t> positions,
                               const DiscoveryConfig& cfg);

/// raw[i][j] = sum_r q[iS + r] . k[jS + S - 1 - r] / (S sqrt(d)) for j <= i,
/// over in-range indices.
StrideScores anti_diagonal_importance(const HeadTensors& t, const DiscoveryConfig& cfg);

/// Row softmax over the non-excluded entries of `raw`.
Matrix normalize_importance(const Matrix& raw);

/// Sums each (B/S) x (B/S) stride tile of `normalized`.
Matrix block_importance(const Matrix& normalized, const DiscoveryConfig& cfg);

struct TopTauRow {
  std::vector<std::uint8_t> selected;  // one flag per key block of the row
  bool fallback = false;               // all-zero row; diagonal chosen
};

/// Minimal set of causal key blocks (n <= m) whose cumulative score reaches
/// tau times the row's causal total. Sort is descending, ties to the smaller
/// block index; tau == 1 keeps every causal block.
TopTauRow select_top_tau(std::span<const float> block_scores_row, std::size_t query_block,
                         double tau);

BoolMatrix static_protection(std::size_t num_blocks, Protection modes);

struct DiscoveryResult {
  BlockSelection selection;
  ImportanceMap importance;
  CostReport cost;
  std::vector<std::size_t> positions;
  std::vector<std::size_t> fallback_rows;
};

/// Full pattern discovery for one head: sample, score, normalize, aggregate,
/// threshold, then OR with the static protection mask.
DiscoveryResult discover(const HeadTensors& t, const DiscoveryConfig& cfg);

}  // namespace sparsegrid
