// Copyright 2026 The SparseGrid Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end: run / masks / sweep over a JSON experiment config.

#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "sparsegrid/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Block-sparse attention pattern discovery harness"};
  app.set_version_flag("--version", std::string("sparsegrid ") + SPARSEGRID_VERSION);
  app.require_subcommand(1);

  sparsegrid::CommandOptions options;
  std::string out_dir = ".";
  std::size_t threads = 0;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", options.config, "Experiment config (JSON, schema 1)")->required();
    sub->add_option("--out", out_dir, "Output directory");
    sub->add_option("--threads", threads, "Worker threads (falls back to SPARSEGRID_THREADS)");
    sub->add_option("--seed", seed, "Override the generated workload seed");
  };
  auto* run = app.add_subcommand("run", "Evaluate every method on every head");
  auto* masks = app.add_subcommand("masks", "Emit block masks as CSV and PGM");
  auto* sweep = app.add_subcommand("sweep", "Aggregate over a stride x tau grid");
  for (auto* sub : {run, masks, sweep}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  options.out_dir = out_dir;
  if (threads == 0) {
    if (const char* env = std::getenv("SPARSEGRID_THREADS")) {
      try {
        threads = std::stoul(env);
      } catch (const std::exception&) {
        std::cerr << "error: SPARSEGRID_THREADS is not a number: " << env << '\n';
        return 2;
      }
    }
  }
  options.threads = threads == 0 ? 1 : threads;
  for (auto* sub : {run, masks, sweep}) {
    if (sub->count_all() > 0 && sub->get_option("--seed")->count() > 0) options.seed = seed;
  }

  sparsegrid::Command command = sparsegrid::Command::kRun;
  if (masks->parsed()) command = sparsegrid::Command::kMasks;
  if (sweep->parsed()) command = sparsegrid::Command::kSweep;
  return sparsegrid::run_command(command, options, std::cout, std::cerr);
}
