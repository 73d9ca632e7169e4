// Copyright 2026 The SparseGrid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "sparsegrid/attention.hpp"

namespace sparsegrid {

/// Counter-based SplitMix64: value n of the stream is the n-th output of a
/// SplitMix64 sequence seeded with `seed`. This algorithm is part of the
/// workload contract; changing it changes every generated tensor.
class CounterRng {
 public:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;

  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t at(std::uint64_t counter) const noexcept;
  /// Uniform on [0, 1) with 53 random bits.
  double unit(std::uint64_t counter) const noexcept;
  /// Uniform on [-sqrt(3), sqrt(3)): zero mean, unit variance.
  double symmetric(std::uint64_t counter) const noexcept;

 private:
  std::uint64_t seed_;
};

enum class Pattern { kRandom, kLocal, kVertical, kSlash, kScatter };

std::string_view to_string(Pattern p);
std::optional<Pattern> parse_pattern(std::string_view name);

/// Default planted logit boost. The slash pattern is the binding case: its
/// random position codes leave a cross-correlation floor of about gain/sqrt(d)
/// on every other key, and 40 is the smallest round value at which each query
/// keeps >= 90% of its ground-truth mass on planted cells for L <= 4096 and
/// d >= 32 (36 is marginal at d = 32).
inline constexpr double kDefaultSignalGain = 40.0;

struct WorkloadSpec {
  std::size_t seq_len = 256;
  std::size_t head_dim = 64;
  std::size_t num_heads = 1;
  std::size_t num_layers = 1;
  Pattern pattern = Pattern::kRandom;
  std::size_t window = 16;        // local: keys i - window .. i
  std::size_t sink_column = 0;    // vertical
  std::size_t slash_offset = 1;   // slash: key i - offset
  std::size_t scatter_count = 4;  // scatter: number of hot columns
  double signal_gain = kDefaultSignalGain;
  std::uint64_t seed = 0;
  /// Vertical only. When > 0, queries at offset blind_stride - 1 of every
  /// stride lose the vertical component and attend to their recent window
  /// instead, on every head whose index is not a multiple of blind_stride.
  std::size_t blind_stride = 0;

  /// Throws ParamError on out-of-range pattern parameters.
  void validate() const;
};

/// Heads of all layers, layer-major.
struct Workload {
  std::size_t num_layers = 0;
  std::size_t num_heads = 0;
  std::vector<HeadTensors> heads;

  const HeadTensors& at(std::size_t layer, std::size_t head) const {
    return heads[layer * num_heads + head];
  }
  HeadTensors& at(std::size_t layer, std::size_t head) { return heads[layer * num_heads + head]; }

  friend bool operator==(const Workload&, const Workload&) = default;
};

Workload generate(const WorkloadSpec& spec);

/// True when query `query` of `head` is a blinded row of the adversarial
/// vertical construction.
bool is_blind_query(const WorkloadSpec& spec, std::size_t head, std::size_t query);

/// Key positions that the planted pattern makes important for one query.
/// Empty when the pattern plants nothing for that query.
std::vector<std::size_t> planted_keys(const WorkloadSpec& spec, std::size_t layer,
                                      std::size_t head, std::size_t query);

struct SelfCheckReport {
  std::size_t eligible_queries = 0;  // queries with at least one planted key
  std::size_t passing_queries = 0;
  double min_share = 1.0;   // lowest planted share of a query's ground-truth mass
  double mean_share = 1.0;
  bool passed = true;
};

/// For every query with planted keys, the share of its ground-truth
/// (tau_star) mass lying on planted keys must reach `min_share`.
SelfCheckReport self_check(const WorkloadSpec& spec, const Workload& workload,
                           double tau_star = 0.95, double min_share = 0.9);

/// L=512, d=64, H=8, vertical sink at 0 hidden from stride offset 7 (S=8).
WorkloadSpec adversarial_vertical_fixture(std::uint64_t seed = 7);

}  // namespace sparsegrid
