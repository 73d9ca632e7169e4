// Copyright 2026 The SparseGrid Authors
// SPDX-License-Identifier: Apache-2.0

#include "sparsegrid/workload.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sparsegrid/errors.hpp"
#include "sparsegrid/oracle.hpp"

namespace sparsegrid {

std::uint64_t CounterRng::at(std::uint64_t counter) const noexcept {
  std::uint64_t z = seed_ + (counter + 1) * kGamma;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

double CounterRng::unit(std::uint64_t counter) const noexcept {
  return static_cast<double>(at(counter) >> 11) * 0x1.0p-53;
}

double CounterRng::symmetric(std::uint64_t counter) const noexcept {
  static const double kSqrt3 = std::sqrt(3.0);
  return (2.0 * unit(counter) - 1.0) * kSqrt3;
}

std::string_view to_string(Pattern p) {
  switch (p) {
    case Pattern::kRandom: return "random";
    case Pattern::kLocal: return "local";
    case Pattern::kVertical: return "vertical";
    case Pattern::kSlash: return "slash";
    case Pattern::kScatter: return "scatter";
  }
  return "unknown";
}

std::optional<Pattern> parse_pattern(std::string_view name) {
  for (Pattern p : {Pattern::kRandom, Pattern::kLocal, Pattern::kVertical, Pattern::kSlash,
                    Pattern::kScatter}) {
    if (to_string(p) == name) return p;
  }
  return std::nullopt;
}

void WorkloadSpec::validate() const {
  if (seq_len == 0 || head_dim == 0 || num_heads == 0 || num_layers == 0) {
    throw ParamError("workload dimensions must all be >= 1");
  }
  if (!std::isfinite(signal_gain) || signal_gain < 0.0) {
    throw ParamError("signal_gain must be finite and >= 0");
  }
  const bool axis_pattern = pattern == Pattern::kLocal || pattern == Pattern::kVertical ||
                            pattern == Pattern::kScatter;
  if (axis_pattern && head_dim < 2) throw ParamError("planted patterns need head_dim >= 2");
  switch (pattern) {
    case Pattern::kLocal:
      if (window >= seq_len) throw ParamError("window must be < seq_len");
      break;
    case Pattern::kVertical:
      if (sink_column >= seq_len) throw ParamError("sink column must be < seq_len");
      break;
    case Pattern::kSlash:
      if (slash_offset >= seq_len) throw ParamError("slash offset must be < seq_len");
      break;
    case Pattern::kScatter:
      if (scatter_count == 0 || scatter_count > seq_len) {
        throw ParamError("scatter count must lie in [1, seq_len]");
      }
      break;
    case Pattern::kRandom: break;
  }
  if (blind_stride > 0) {
    if (pattern != Pattern::kVertical) throw ParamError("blind_stride applies to vertical only");
    if (window >= seq_len) throw ParamError("window must be < seq_len");
  }
}

namespace {

enum Stream : std::uint64_t { kQuery = 0, kKey = 1, kValue = 2, kAux = 3 };

// Axis 0 carries vertical / scatter structure, axis 1 carries recency.
constexpr std::size_t kColumnAxis = 0;
constexpr std::size_t kRecencyAxis = 1;

std::uint64_t counter(const WorkloadSpec& s, std::size_t layer, std::size_t head, Stream stream,
                      std::size_t row, std::size_t col) {
  std::uint64_t c = static_cast<std::uint64_t>(layer) * s.num_heads + head;
  c = c * 4 + stream;
  c = c * s.seq_len + row;
  return c * s.head_dim + col;
}

Matrix base_matrix(const WorkloadSpec& s, const CounterRng& rng, std::size_t layer,
                   std::size_t head, Stream stream) {
  Matrix m(s.seq_len, s.head_dim);
  for (std::size_t r = 0; r < s.seq_len; ++r)
    for (std::size_t c = 0; c < s.head_dim; ++c)
      m(r, c) = static_cast<float>(rng.symmetric(counter(s, layer, head, stream, r, c)));
  return m;
}

std::vector<std::size_t> scatter_columns(const WorkloadSpec& s, const CounterRng& rng,
                                         std::size_t layer, std::size_t head) {
  std::vector<std::size_t> cols;
  std::uint64_t draw = 0;
  while (cols.size() < s.scatter_count) {
    const std::size_t c = static_cast<std::size_t>(
        rng.at(counter(s, layer, head, kAux, 0, 0) + draw++) % s.seq_len);
    if (std::find(cols.begin(), cols.end(), c) == cols.end()) cols.push_back(c);
  }
  std::sort(cols.begin(), cols.end());
  return cols;
}

// Unit direction per position for the slash pattern.
Matrix slash_codes(const WorkloadSpec& s, const CounterRng& rng, std::size_t layer,
                   std::size_t head) {
  Matrix codes(s.seq_len, s.head_dim);
  for (std::size_t t = 0; t < s.seq_len; ++t) {
    double norm = 0.0;
    for (std::size_t c = 0; c < s.head_dim; ++c) {
      const double x = rng.symmetric(counter(s, layer, head, kAux, t, c));
      codes(t, c) = static_cast<float>(x);
      norm += x * x;
    }
    norm = std::sqrt(norm);
    for (std::size_t c = 0; c < s.head_dim; ++c) {
      codes(t, c) = static_cast<float>(codes(t, c) / norm);
    }
  }
  return codes;
}

// Replaces the component of m[row] along the unit code with amp * code, so
// the random base does not leak into the planted logit.
void add_code(Matrix& m, std::size_t row, const Matrix& codes, std::size_t code_row, double amp) {
  double along = 0.0;
  for (std::size_t c = 0; c < m.cols(); ++c) along += static_cast<double>(m(row, c)) * codes(code_row, c);
  for (std::size_t c = 0; c < m.cols(); ++c) {
    m(row, c) = static_cast<float>(m(row, c) + (amp - along) * codes(code_row, c));
  }
}

// Together with set_recency_keys, query i gains gain * j / (window + 1)
// logits towards key j, so mass decays by e^-gain per window of distance.
void plant_recency(Matrix& q, std::size_t query, double gain) {
  q(query, kRecencyAxis) = static_cast<float>(gain * std::sqrt(static_cast<double>(q.cols())));
}

void set_recency_keys(Matrix& k, std::size_t window) {
  for (std::size_t j = 0; j < k.rows(); ++j) {
    k(j, kRecencyAxis) = static_cast<float>(static_cast<double>(j) /
                                            static_cast<double>(window + 1));
  }
}

}  // namespace

bool is_blind_query(const WorkloadSpec& spec, std::size_t head, std::size_t query) {
  if (spec.pattern != Pattern::kVertical || spec.blind_stride == 0) return false;
  if (head % spec.blind_stride == 0) return false;
  return query % spec.blind_stride == spec.blind_stride - 1;
}

Workload generate(const WorkloadSpec& spec) {
  spec.validate();
  const CounterRng rng(spec.seed);
  const std::size_t L = spec.seq_len;
  const std::size_t d = spec.head_dim;
  const double root_d = std::sqrt(static_cast<double>(d));
  // Planted pairs gain signal_gain logits: a * b / sqrt(d) = gain.
  const double amp = std::sqrt(spec.signal_gain * root_d);

  Workload w;
  w.num_layers = spec.num_layers;
  w.num_heads = spec.num_heads;
  w.heads.reserve(spec.num_layers * spec.num_heads);
  for (std::size_t layer = 0; layer < spec.num_layers; ++layer) {
    for (std::size_t head = 0; head < spec.num_heads; ++head) {
      Matrix q = base_matrix(spec, rng, layer, head, kQuery);
      Matrix k = base_matrix(spec, rng, layer, head, kKey);
      Matrix v = base_matrix(spec, rng, layer, head, kValue);

      switch (spec.pattern) {
        case Pattern::kRandom: break;
        case Pattern::kLocal:
          set_recency_keys(k, spec.window);
          for (std::size_t i = 0; i < L; ++i) plant_recency(q, i, spec.signal_gain);
          break;
        case Pattern::kVertical:
        case Pattern::kScatter: {
          const std::vector<std::size_t> cols =
              spec.pattern == Pattern::kVertical
                  ? std::vector<std::size_t>{spec.sink_column}
                  : scatter_columns(spec, rng, layer, head);
          for (std::size_t j = 0; j < L; ++j) k(j, kColumnAxis) = 0.0f;
          for (std::size_t c : cols) k(c, kColumnAxis) = static_cast<float>(amp);
          for (std::size_t i = 0; i < L; ++i) q(i, kColumnAxis) = static_cast<float>(amp);
          if (spec.blind_stride > 0 && head % spec.blind_stride != 0) {
            for (std::size_t j = 0; j < L; ++j) k(j, kRecencyAxis) = 0.0f;
            set_recency_keys(k, spec.window);
            for (std::size_t i = 0; i < L; ++i) {
              if (is_blind_query(spec, head, i)) {
                q(i, kColumnAxis) = 0.0f;
                plant_recency(q, i, spec.signal_gain);
              } else {
                q(i, kRecencyAxis) = 0.0f;
              }
            }
          }
          break;
        }
        case Pattern::kSlash: {
          const Matrix codes = slash_codes(spec, rng, layer, head);
          for (std::size_t j = 0; j < L; ++j) add_code(k, j, codes, j, amp);
          for (std::size_t i = spec.slash_offset; i < L; ++i)
            add_code(q, i, codes, i - spec.slash_offset, amp);
          break;
        }
      }
      w.heads.emplace_back(std::move(q), std::move(k), std::move(v));
    }
  }
  return w;
}

std::vector<std::size_t> planted_keys(const WorkloadSpec& spec, std::size_t layer,
                                      std::size_t head, std::size_t query) {
  std::vector<std::size_t> keys;
  const auto window_keys = [&] {
    const std::size_t lo = query >= spec.window ? query - spec.window : 0;
    for (std::size_t j = lo; j <= query; ++j) keys.push_back(j);
  };
  switch (spec.pattern) {
    case Pattern::kRandom: break;
    case Pattern::kLocal: window_keys(); break;
    case Pattern::kVertical:
      if (is_blind_query(spec, head, query)) {
        window_keys();
      } else if (spec.sink_column <= query) {
        keys.push_back(spec.sink_column);
      }
      break;
    case Pattern::kSlash:
      if (query >= spec.slash_offset) keys.push_back(query - spec.slash_offset);
      break;
    case Pattern::kScatter:
      for (std::size_t c : scatter_columns(spec, CounterRng(spec.seed), layer, head))
        if (c <= query) keys.push_back(c);
      break;
  }
  return keys;
}

SelfCheckReport self_check(const WorkloadSpec& spec, const Workload& workload, double tau_star,
                           double min_share) {
  SelfCheckReport report;
  double share_sum = 0.0;
  for (std::size_t layer = 0; layer < workload.num_layers; ++layer) {
    for (std::size_t head = 0; head < workload.num_heads; ++head) {
      const HeadTensors& t = workload.at(layer, head);
      const Matrix probs = attention_probabilities(t, BoolMatrix::causal(t.seq_len()));
      const GroundTruth truth = ground_truth_from_probabilities(probs, tau_star);
      for (std::size_t i = 0; i < t.seq_len(); ++i) {
        const auto planted = planted_keys(spec, layer, head, i);
        if (planted.empty()) continue;
        double inside = 0.0;
        double total = 0.0;
        for (std::size_t j : truth.key_sets[i]) {
          total += probs(i, j);
          if (std::binary_search(planted.begin(), planted.end(), j)) inside += probs(i, j);
        }
        const double share = total > 0.0 ? inside / total : 0.0;
        ++report.eligible_queries;
        if (share >= min_share) ++report.passing_queries;
        report.min_share = std::min(report.min_share, share);
        share_sum += share;
      }
    }
  }
  if (report.eligible_queries > 0) {
    report.mean_share = share_sum / static_cast<double>(report.eligible_queries);
  }
  report.passed = report.passing_queries == report.eligible_queries;
  return report;
}

WorkloadSpec adversarial_vertical_fixture(std::uint64_t seed) {
  WorkloadSpec spec;
  spec.seq_len = 512;
  spec.head_dim = 64;
  spec.num_heads = 8;
  spec.num_layers = 1;
  spec.pattern = Pattern::kVertical;
  spec.sink_column = 0;
  spec.window = 8;
  spec.signal_gain = 96.0;
  spec.seed = seed;
  spec.blind_stride = 8;
  return spec;
}

}  // namespace sparsegrid
