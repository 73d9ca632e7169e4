// Copyright 2026 The SparseGrid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "sparsegrid/discovery.hpp"
#include "sparsegrid/workload.hpp"

namespace sparsegrid {

struct MethodSpec {
  std::string label;
  DiscoveryConfig config;  // head/layer indices are filled per work item
};

struct SweepGrid {
  std::vector<std::size_t> strides = {4, 8, 16, 32};
  std::vector<double> taus = {0.9, 0.95};
};

/// A workload plus a list of discovery methods to evaluate on it.
struct ExperimentSpec {
  std::optional<WorkloadSpec> generated;
  std::filesystem::path tensor_file;  // used when `generated` is empty
  std::vector<MethodSpec> methods;
  double tau_star = 0.95;
  std::string report = "report";
  std::string mask_dir = "masks";
  SweepGrid sweep;

  /// Throws ConfigError when the spec cannot be run.
  void validate() const;
};

/// Parses a schema-1 JSON experiment. Unknown keys are rejected; relative
/// tensor paths resolve against `base_dir`. Throws ConfigError.
ExperimentSpec parse_experiment(const std::string& text,
                                const std::filesystem::path& base_dir = {});
ExperimentSpec load_experiment(const std::filesystem::path& path);

/// Builds or loads the workload. `seed` overrides a generated workload's seed.
Workload materialize(const ExperimentSpec& spec, std::optional<std::uint64_t> seed = std::nullopt);

struct ResultRow {
  std::string method;
  Strategy strategy = Strategy::kHeadRoundRobin;
  std::size_t stride = 0;
  std::size_t block_size = 0;
  double tau = 0.0;
  std::size_t layer = 0;
  std::size_t head = 0;
  double sparsity = 0.0;
  double frobenius_error = 0.0;
  double relative_error = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::uint64_t search_ops = 0;
  std::uint64_t logit_ops = 0;
  std::uint64_t selected_blocks = 0;
};

/// Unweighted mean over the (layer, head) rows of one method.
struct AggregateRow {
  std::string method;
  Strategy strategy = Strategy::kHeadRoundRobin;
  std::size_t stride = 0;
  std::size_t block_size = 0;
  double tau = 0.0;
  std::size_t count = 0;
  double mean_sparsity = 0.0;
  double mean_frobenius_error = 0.0;
  double mean_relative_error = 0.0;
  double mean_precision = 0.0;
  double mean_recall = 0.0;
  double mean_f1 = 0.0;
  double mean_search_ops = 0.0;
  double mean_logit_ops = 0.0;
  double mean_selected_blocks = 0.0;
};

struct MaskRecord {
  std::string method;
  std::size_t layer = 0;
  std::size_t head = 0;
  BoolMatrix selection;
  BoolMatrix truth;  // ground-truth block mask at the method's block size
};

struct RunResult {
  std::vector<ResultRow> rows;  // method-major, then layer, then head
  std::vector<AggregateRow> aggregates;
  std::vector<MaskRecord> masks;  // filled when requested
};

/// Evaluates every (method, layer, head). Throws NumericError naming the
/// (layer, head) on a degenerate row or an out-of-range metric.
RunResult run_experiment(const ExperimentSpec& spec, const Workload& workload,
                         std::size_t threads = 1, bool keep_masks = false);

/// Expands every method over the stride x tau grid and aggregates.
std::vector<AggregateRow> run_sweep(const ExperimentSpec& spec, const Workload& workload,
                                    std::size_t threads = 1);

std::vector<AggregateRow> aggregate(const std::vector<ResultRow>& rows);

/// "%.6g" rendering shared by every report.
std::string format_real(double v);

std::string rows_csv(const std::vector<ResultRow>& rows);
std::string aggregates_csv(const std::vector<AggregateRow>& aggregates);
std::string sweep_csv(const std::vector<AggregateRow>& aggregates);
std::string aggregates_json(const std::vector<AggregateRow>& aggregates);

std::string mask_csv(const BoolMatrix& mask);
/// Binary PGM (P5, maxval 255); selected = 255, row 0 at the top.
std::string mask_pgm(const BoolMatrix& mask);
BoolMatrix parse_mask_csv(const std::string& text);
BoolMatrix parse_mask_pgm(const std::string& bytes);

/// Writes <label>_l<L>_h<H>.{csv,pgm} for each selection and
/// truth_b<B>_l<L>_h<H>.{csv,pgm} for each ground truth, re-reading both
/// encodings to confirm they decode to the same matrix.
void write_masks(const std::filesystem::path& dir, const RunResult& result);

enum class Command { kRun, kMasks, kSweep };

struct CommandOptions {
  std::filesystem::path config;
  std::filesystem::path out_dir = ".";
  std::size_t threads = 1;
  std::optional<std::uint64_t> seed;
};

/// Executes one CLI command. Returns 0 on success, 2 for usage, config or IO
/// problems and 3 for numeric degeneracy; messages go to `err`.
int run_command(Command command, const CommandOptions& options, std::ostream& out,
                std::ostream& err);

}  // namespace sparsegrid
