// Copyright 2026 The SparseGrid Authors
// SPDX-License-Identifier: Apache-2.0

#include "sparsegrid/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iterator>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "sparsegrid/errors.hpp"
#include "sparsegrid/oracle.hpp"
#include "sparsegrid/tensor_io.hpp"

namespace sparsegrid {

namespace {

using nlohmann::json;

constexpr int kSchemaVersion = 1;

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed,
                    const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw ConfigError("unknown key \"" + key + "\" in " + where);
    }
  }
}

template <typename T>
T get_as(const json& obj, const char* key, const std::string& where) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + " is missing or has the wrong type");
  }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  return get_as<T>(obj, key, where);
}

WorkloadSpec parse_generator(const json& g) {
  const std::string where = "workload.generate";
  reject_unknown(g,
                 {"seq_len", "head_dim", "num_heads", "num_layers", "pattern", "window",
                  "sink_column", "slash_offset", "scatter_count", "signal_gain", "seed",
                  "blind_stride"},
                 where);
  WorkloadSpec s;
  s.seq_len = get_as<std::size_t>(g, "seq_len", where);
  s.head_dim = get_as<std::size_t>(g, "head_dim", where);
  s.num_heads = get_or<std::size_t>(g, "num_heads", 1, where);
  s.num_layers = get_or<std::size_t>(g, "num_layers", 1, where);
  const auto pattern = get_or<std::string>(g, "pattern", "random", where);
  const auto parsed = parse_pattern(pattern);
  if (!parsed) throw ConfigError("unknown pattern \"" + pattern + "\"");
  s.pattern = *parsed;
  s.window = get_or<std::size_t>(g, "window", s.window, where);
  s.sink_column = get_or<std::size_t>(g, "sink_column", s.sink_column, where);
  s.slash_offset = get_or<std::size_t>(g, "slash_offset", s.slash_offset, where);
  s.scatter_count = get_or<std::size_t>(g, "scatter_count", s.scatter_count, where);
  s.signal_gain = get_or<double>(g, "signal_gain", s.signal_gain, where);
  s.seed = get_or<std::uint64_t>(g, "seed", 0, where);
  s.blind_stride = get_or<std::size_t>(g, "blind_stride", 0, where);
  return s;
}

std::string default_label(const DiscoveryConfig& c) {
  return std::string(to_string(c.strategy)) + "-S" + std::to_string(c.stride) + "-B" +
         std::to_string(c.block_size) + "-t" + format_real(c.tau);
}

MethodSpec parse_method(const json& m, std::size_t index) {
  const std::string where = "methods[" + std::to_string(index) + "]";
  reject_unknown(m, {"label", "strategy", "stride", "block_size", "tau", "protection"}, where);
  MethodSpec method;
  const auto strategy = get_as<std::string>(m, "strategy", where);
  const auto parsed = parse_strategy(strategy);
  if (!parsed) throw ConfigError(where + ": unknown strategy \"" + strategy + "\"");
  method.config.strategy = *parsed;
  method.config.stride = get_as<std::size_t>(m, "stride", where);
  method.config.block_size = get_as<std::size_t>(m, "block_size", where);
  method.config.tau = get_as<double>(m, "tau", where);
  method.config.protection = Protection::kLastQueryBlock;
  if (m.contains("protection")) {
    const auto names = get_as<std::vector<std::string>>(m, "protection", where);
    method.config.protection = Protection::kNone;
    for (const auto& name : names) {
      const auto p = parse_protection(name);
      if (!p) throw ConfigError(where + ": unknown protection \"" + name + "\"");
      method.config.protection = method.config.protection | *p;
    }
  }
  method.label = get_or<std::string>(m, "label", default_label(method.config), where);
  return method;
}

std::size_t resolve_threads(std::size_t requested) { return std::max<std::size_t>(1, requested); }

// Runs fn(i) for i in [0, n) on `threads` workers. The first exception (by
// index) is rethrown after all workers finish.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t count = std::min(resolve_threads(threads), std::max<std::size_t>(n, 1));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < count; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

struct HeadContext {
  Matrix full_out;
  double full_norm = 0.0;
  GroundTruth truth;
};

bool in_unit_range(double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; }

std::string sanitize(const std::string& label) {
  std::string out = label;
  for (char& c : out) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '-' || c == '_' || c == '.';
    if (!ok) c = '_';
  }
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

double rounded(double v) { return std::strtod(format_real(v).c_str(), nullptr); }

}  // namespace

void ExperimentSpec::validate() const {
  if (methods.empty()) throw ConfigError("at least one method is required");
  if (!generated && tensor_file.empty()) throw ConfigError("workload is missing");
  if (!(tau_star > 0.0 && tau_star <= 1.0)) throw ConfigError("tau_star must lie in (0, 1]");
  if (report.empty()) throw ConfigError("outputs.report must not be empty");
  std::set<std::string> labels;
  for (const auto& m : methods) {
    try {
      m.config.validate();
    } catch (const ParamError& e) {
      throw ConfigError("method " + m.label + ": " + e.what());
    }
    if (!labels.insert(m.label).second) throw ConfigError("duplicate method label " + m.label);
  }
  if (generated) {
    try {
      generated->validate();
    } catch (const ParamError& e) {
      throw ConfigError(std::string("workload: ") + e.what());
    }
  }
}

ExperimentSpec parse_experiment(const std::string& text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  reject_unknown(doc, {"schema", "workload", "methods", "tau_star", "outputs", "sweep"}, "config");
  if (!doc.contains("schema") || !doc["schema"].is_number_integer() ||
      doc["schema"].get<int>() != kSchemaVersion) {
    throw ConfigError("config must declare \"schema\": 1");
  }

  ExperimentSpec spec;
  if (!doc.contains("workload")) throw ConfigError("config.workload is required");
  const json& wl = doc["workload"];
  reject_unknown(wl, {"generate", "file"}, "workload");
  if (wl.contains("generate") == wl.contains("file")) {
    throw ConfigError("workload needs exactly one of \"generate\" or \"file\"");
  }
  if (wl.contains("generate")) {
    spec.generated = parse_generator(wl["generate"]);
  } else {
    std::filesystem::path file = get_as<std::string>(wl, "file", "workload");
    spec.tensor_file = file.is_relative() && !base_dir.empty() ? base_dir / file : file;
  }

  if (!doc.contains("methods") || !doc["methods"].is_array()) {
    throw ConfigError("config.methods must be an array");
  }
  for (std::size_t i = 0; i < doc["methods"].size(); ++i) {
    spec.methods.push_back(parse_method(doc["methods"][i], i));
  }
  spec.tau_star = get_or<double>(doc, "tau_star", spec.tau_star, "config");
  if (doc.contains("outputs")) {
    const json& out = doc["outputs"];
    reject_unknown(out, {"report", "mask_dir"}, "outputs");
    spec.report = get_or<std::string>(out, "report", spec.report, "outputs");
    spec.mask_dir = get_or<std::string>(out, "mask_dir", spec.mask_dir, "outputs");
  }
  if (doc.contains("sweep")) {
    const json& sw = doc["sweep"];
    reject_unknown(sw, {"strides", "taus"}, "sweep");
    spec.sweep.strides = get_or<std::vector<std::size_t>>(sw, "strides", spec.sweep.strides, "sweep");
    spec.sweep.taus = get_or<std::vector<double>>(sw, "taus", spec.sweep.taus, "sweep");
  }
  spec.validate();
  return spec;
}

ExperimentSpec load_experiment(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  return parse_experiment(text, path.parent_path());
}

Workload materialize(const ExperimentSpec& spec, std::optional<std::uint64_t> seed) {
  if (spec.generated) {
    WorkloadSpec ws = *spec.generated;
    if (seed) ws.seed = *seed;
    return generate(ws);
  }
  return load_tensors(spec.tensor_file);
}

RunResult run_experiment(const ExperimentSpec& spec, const Workload& workload,
                         std::size_t threads, bool keep_masks) {
  spec.validate();
  const std::size_t num_heads = workload.num_layers * workload.num_heads;
  if (workload.heads.size() != num_heads || num_heads == 0) {
    throw ConfigError("workload has no heads");
  }

  std::vector<HeadContext> contexts(num_heads);
  parallel_for(num_heads, threads, [&](std::size_t idx) {
    const std::size_t layer = idx / workload.num_heads;
    const std::size_t head = idx % workload.num_heads;
    const HeadTensors& t = workload.heads[idx];
    for (const Matrix* m : {&t.q(), &t.k(), &t.v()}) {
      const auto data = m->data();
      if (!std::all_of(data.begin(), data.end(), [](float x) { return std::isfinite(x); })) {
        throw NumericError(layer, head, "non-finite value in Q/K/V");
      }
    }
    try {
      HeadContext& ctx = contexts[idx];
      ctx.full_out = full_attention(t);
      ctx.full_norm = frobenius_norm(ctx.full_out);
      const Matrix probs = attention_probabilities(t, BoolMatrix::causal(t.seq_len()));
      ctx.truth = ground_truth_from_probabilities(probs, spec.tau_star);
    } catch (const DegenerateRowError& e) {
      throw NumericError(layer, head, e.what());
    }
  });

  const std::size_t items = spec.methods.size() * num_heads;
  RunResult result;
  result.rows.resize(items);
  if (keep_masks) result.masks.resize(items);
  parallel_for(items, threads, [&](std::size_t item) {
    const MethodSpec& method = spec.methods[item / num_heads];
    const std::size_t idx = item % num_heads;
    const std::size_t layer = idx / workload.num_heads;
    const std::size_t head = idx % workload.num_heads;
    const HeadTensors& t = workload.heads[idx];
    const HeadContext& ctx = contexts[idx];

    DiscoveryConfig cfg = method.config;
    cfg.head_index = head;
    cfg.layer_index = layer;
    cfg.num_heads = workload.num_heads;

    ResultRow& row = result.rows[item];
    row.method = method.label;
    row.strategy = cfg.strategy;
    row.stride = cfg.stride;
    row.block_size = cfg.block_size;
    row.tau = cfg.tau;
    row.layer = layer;
    row.head = head;
    try {
      const DiscoveryResult found = discover(t, cfg);
      const AttentionResult sparse = sparse_attention(t, found.selection);
      GroundTruth truth = ctx.truth;
      compute_block_truth(truth, cfg.block_size);
      const SelectionReport score = score_selection(found.selection, truth);

      row.sparsity = found.cost.sparsity;
      row.frobenius_error = approximation_error(ctx.full_out, sparse.out);
      row.relative_error =
          ctx.full_norm > 0.0 ? row.frobenius_error / ctx.full_norm : row.frobenius_error;
      row.precision = score.precision;
      row.recall = score.recall;
      row.f1 = score.f1;
      row.search_ops = found.cost.search_ops;
      row.logit_ops = sparse.cost.logit_ops;
      row.selected_blocks = found.cost.selected_causal_pairs;
      if (keep_masks) {
        result.masks[item] = MaskRecord{method.label, layer, head, found.selection.blocks,
                                        truth.block_mask()};
      }
    } catch (const DegenerateRowError& e) {
      throw NumericError(layer, head, e.what());
    }
    if (!std::isfinite(row.frobenius_error) || !std::isfinite(row.relative_error) ||
        !in_unit_range(row.sparsity) || !in_unit_range(row.precision) ||
        !in_unit_range(row.recall) || !in_unit_range(row.f1)) {
      throw NumericError(layer, head, "metric out of range for method " + method.label);
    }
  });
  result.aggregates = aggregate(result.rows);
  return result;
}

std::vector<AggregateRow> aggregate(const std::vector<ResultRow>& rows) {
  std::vector<AggregateRow> out;
  for (const ResultRow& r : rows) {
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const AggregateRow& a) { return a.method == r.method; });
    if (it == out.end()) {
      AggregateRow a;
      a.method = r.method;
      a.strategy = r.strategy;
      a.stride = r.stride;
      a.block_size = r.block_size;
      a.tau = r.tau;
      out.push_back(a);
      it = std::prev(out.end());
    }
    ++it->count;
    it->mean_sparsity += r.sparsity;
    it->mean_frobenius_error += r.frobenius_error;
    it->mean_relative_error += r.relative_error;
    it->mean_precision += r.precision;
    it->mean_recall += r.recall;
    it->mean_f1 += r.f1;
    it->mean_search_ops += static_cast<double>(r.search_ops);
    it->mean_logit_ops += static_cast<double>(r.logit_ops);
    it->mean_selected_blocks += static_cast<double>(r.selected_blocks);
  }
  for (AggregateRow& a : out) {
    const double n = static_cast<double>(a.count);
    a.mean_sparsity /= n;
    a.mean_frobenius_error /= n;
    a.mean_relative_error /= n;
    a.mean_precision /= n;
    a.mean_recall /= n;
    a.mean_f1 /= n;
    a.mean_search_ops /= n;
    a.mean_logit_ops /= n;
    a.mean_selected_blocks /= n;
  }
  return out;
}

std::vector<AggregateRow> run_sweep(const ExperimentSpec& spec, const Workload& workload,
                                    std::size_t threads) {
  if (spec.sweep.strides.empty() || spec.sweep.taus.empty()) {
    throw ConfigError("sweep grid must have at least one stride and one tau");
  }
  ExperimentSpec expanded = spec;
  expanded.methods.clear();
  for (const MethodSpec& base : spec.methods) {
    for (std::size_t stride : spec.sweep.strides) {
      for (double tau : spec.sweep.taus) {
        MethodSpec m = base;
        m.config.stride = stride;
        m.config.tau = tau;
        m.label = base.label + "/S" + std::to_string(stride) + "/t" + format_real(tau);
        expanded.methods.push_back(std::move(m));
      }
    }
  }
  return run_experiment(expanded, workload, threads).aggregates;
}

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string rows_csv(const std::vector<ResultRow>& rows) {
  std::ostringstream os;
  os << "method,strategy,stride,block_size,tau,layer,head,sparsity,frobenius_error,"
        "relative_error,precision,recall,f1,search_ops,logit_ops,selected_blocks\n";
  for (const ResultRow& r : rows) {
    os << r.method << ',' << to_string(r.strategy) << ',' << r.stride << ',' << r.block_size
       << ',' << format_real(r.tau) << ',' << r.layer << ',' << r.head << ','
       << format_real(r.sparsity) << ',' << format_real(r.frobenius_error) << ','
       << format_real(r.relative_error) << ',' << format_real(r.precision) << ','
       << format_real(r.recall) << ',' << format_real(r.f1) << ',' << r.search_ops << ','
       << r.logit_ops << ',' << r.selected_blocks << '\n';
  }
  return os.str();
}

std::string aggregates_csv(const std::vector<AggregateRow>& aggregates) {
  std::ostringstream os;
  os << "method,strategy,stride,block_size,tau,count,mean_sparsity,mean_frobenius_error,"
        "mean_relative_error,mean_precision,mean_recall,mean_f1,mean_search_ops,"
        "mean_logit_ops,mean_selected_blocks\n";
  for (const AggregateRow& a : aggregates) {
    os << a.method << ',' << to_string(a.strategy) << ',' << a.stride << ',' << a.block_size
       << ',' << format_real(a.tau) << ',' << a.count << ',' << format_real(a.mean_sparsity)
       << ',' << format_real(a.mean_frobenius_error) << ','
       << format_real(a.mean_relative_error) << ',' << format_real(a.mean_precision) << ','
       << format_real(a.mean_recall) << ',' << format_real(a.mean_f1) << ','
       << format_real(a.mean_search_ops) << ',' << format_real(a.mean_logit_ops) << ','
       << format_real(a.mean_selected_blocks) << '\n';
  }
  return os.str();
}

std::string sweep_csv(const std::vector<AggregateRow>& aggregates) {
  std::ostringstream os;
  os << "method,strategy,stride,block_size,tau,mean_sparsity,mean_relative_error,mean_recall,"
        "mean_search_ops,mean_selected_blocks\n";
  for (const AggregateRow& a : aggregates) {
    os << a.method << ',' << to_string(a.strategy) << ',' << a.stride << ',' << a.block_size
       << ',' << format_real(a.tau) << ',' << format_real(a.mean_sparsity) << ','
       << format_real(a.mean_relative_error) << ',' << format_real(a.mean_recall) << ','
       << format_real(a.mean_search_ops) << ',' << format_real(a.mean_selected_blocks) << '\n';
  }
  return os.str();
}

std::string aggregates_json(const std::vector<AggregateRow>& aggregates) {
  nlohmann::ordered_json doc;
  doc["schema"] = kSchemaVersion;
  doc["aggregates"] = nlohmann::ordered_json::array();
  for (const AggregateRow& a : aggregates) {
    nlohmann::ordered_json row;
    row["method"] = a.method;
    row["strategy"] = std::string(to_string(a.strategy));
    row["stride"] = a.stride;
    row["block_size"] = a.block_size;
    row["tau"] = rounded(a.tau);
    row["count"] = a.count;
    row["mean_sparsity"] = rounded(a.mean_sparsity);
    row["mean_frobenius_error"] = rounded(a.mean_frobenius_error);
    row["mean_relative_error"] = rounded(a.mean_relative_error);
    row["mean_precision"] = rounded(a.mean_precision);
    row["mean_recall"] = rounded(a.mean_recall);
    row["mean_f1"] = rounded(a.mean_f1);
    row["mean_search_ops"] = rounded(a.mean_search_ops);
    row["mean_logit_ops"] = rounded(a.mean_logit_ops);
    row["mean_selected_blocks"] = rounded(a.mean_selected_blocks);
    doc["aggregates"].push_back(std::move(row));
  }
  return doc.dump(2) + "\n";
}

std::string mask_csv(const BoolMatrix& mask) {
  std::string out;
  for (std::size_t r = 0; r < mask.rows(); ++r) {
    for (std::size_t c = 0; c < mask.cols(); ++c) {
      if (c) out += ',';
      out += mask(r, c) ? '1' : '0';
    }
    out += '\n';
  }
  return out;
}

std::string mask_pgm(const BoolMatrix& mask) {
  std::string out = "P5\n" + std::to_string(mask.cols()) + " " + std::to_string(mask.rows()) +
                    "\n255\n";
  for (std::size_t r = 0; r < mask.rows(); ++r)
    for (std::size_t c = 0; c < mask.cols(); ++c)
      out += static_cast<char>(mask(r, c) ? 255 : 0);
  return out;
}

BoolMatrix parse_mask_csv(const std::string& text) {
  std::vector<std::vector<bool>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<bool> row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      if (cell != "0" && cell != "1") throw IoError("mask CSV cell is not 0/1: " + cell);
      row.push_back(cell == "1");
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw IoError("mask CSV rows differ in length");
    }
    rows.push_back(std::move(row));
  }
  BoolMatrix mask(rows.size(), rows.empty() ? 0 : rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) mask.set(r, c, rows[r][c]);
  return mask;
}

BoolMatrix parse_mask_pgm(const std::string& bytes) {
  std::istringstream in(bytes);
  std::string magic;
  std::size_t width = 0;
  std::size_t height = 0;
  int maxval = 0;
  in >> magic >> width >> height >> maxval;
  if (!in || magic != "P5" || maxval != 255) throw IoError("not a P5/255 PGM image");
  in.get();  // single whitespace before the raster
  const std::size_t start = static_cast<std::size_t>(in.tellg());
  if (bytes.size() != start + width * height) throw IoError("PGM raster size mismatch");
  BoolMatrix mask(height, width);
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      const auto px = static_cast<unsigned char>(bytes[start + r * width + c]);
      if (px != 0 && px != 255) throw IoError("PGM pixel is neither 0 nor 255");
      mask.set(r, c, px == 255);
    }
  }
  return mask;
}

void write_masks(const std::filesystem::path& dir, const RunResult& result) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  auto emit = [&](const std::string& stem, const BoolMatrix& mask) {
    const auto csv_path = dir / (stem + ".csv");
    const auto pgm_path = dir / (stem + ".pgm");
    write_file(csv_path, mask_csv(mask));
    write_file(pgm_path, mask_pgm(mask));
    const BoolMatrix from_csv = parse_mask_csv(read_file(csv_path));
    const BoolMatrix from_pgm = parse_mask_pgm(read_file(pgm_path));
    if (!(from_csv == mask) || !(from_pgm == mask)) {
      throw IoError("mask files for " + stem + " do not decode to the written matrix");
    }
  };

  std::set<std::string> truths_written;
  for (std::size_t i = 0; i < result.masks.size(); ++i) {
    const MaskRecord& rec = result.masks[i];
    const std::string where = "_l" + std::to_string(rec.layer) + "_h" + std::to_string(rec.head);
    emit(sanitize(rec.method) + where, rec.selection);
    const std::size_t block_size = result.rows[i].block_size;
    const std::string truth_stem = "truth_b" + std::to_string(block_size) + where;
    if (truths_written.insert(truth_stem).second) emit(truth_stem, rec.truth);
  }
}

int run_command(Command command, const CommandOptions& options, std::ostream& out,
                std::ostream& err) {
  ExperimentSpec spec;
  try {
    spec = load_experiment(options.config);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  Workload workload;
  try {
    workload = materialize(spec, options.seed);
  } catch (const Error& e) {
    err << "error: cannot load workload: " << e.what() << '\n';
    return 2;
  }

  try {
    std::error_code ec;
    std::filesystem::create_directories(options.out_dir, ec);
    if (ec) throw IoError("cannot create " + options.out_dir.string() + ": " + ec.message());
    const auto base = options.out_dir / spec.report;
    switch (command) {
      case Command::kRun: {
        const RunResult result = run_experiment(spec, workload, options.threads);
        write_file(base.string() + ".csv", rows_csv(result.rows));
        write_file(base.string() + "_aggregate.csv", aggregates_csv(result.aggregates));
        write_file(base.string() + ".json", aggregates_json(result.aggregates));
        out << aggregates_csv(result.aggregates);
        break;
      }
      case Command::kMasks: {
        const RunResult result = run_experiment(spec, workload, options.threads, true);
        write_masks(options.out_dir / spec.mask_dir, result);
        out << "wrote " << result.masks.size() << " masks to "
            << (options.out_dir / spec.mask_dir).string() << '\n';
        break;
      }
      case Command::kSweep: {
        const auto rows = run_sweep(spec, workload, options.threads);
        write_file(base.string() + "_sweep.csv", sweep_csv(rows));
        write_file(base.string() + "_sweep.json", aggregates_json(rows));
        out << sweep_csv(rows);
        break;
      }
    }
  } catch (const NumericError& e) {
    err << "error: numeric degeneracy at " << e.what() << '\n';
    return 3;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace sparsegrid
