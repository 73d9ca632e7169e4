// Copyright 2026 The SparseGrid Authors
// SPDX-License-Identifier: Apache-2.0

#include "sparsegrid/tensor_io.hpp"

#include <array>
#include <bit>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "sparsegrid/errors.hpp"

namespace sparsegrid {

namespace {

void put_u32(std::vector<char>& buf, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) buf.push_back(static_cast<char>((v >> (8 * b)) & 0xFFu));
}

std::uint32_t get_u32(const std::vector<char>& buf, std::size_t offset) {
  std::uint32_t v = 0;
  for (int b = 0; b < 4; ++b) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[offset + b])) << (8 * b);
  }
  return v;
}

void put_matrix(std::vector<char>& buf, const Matrix& m) {
  for (float x : m.data()) put_u32(buf, std::bit_cast<std::uint32_t>(x));
}

Matrix get_matrix(const std::vector<char>& buf, std::size_t& offset, std::size_t rows,
                  std::size_t cols) {
  std::vector<float> data(rows * cols);
  for (float& x : data) {
    x = std::bit_cast<float>(get_u32(buf, offset));
    offset += 4;
  }
  return Matrix(rows, cols, std::move(data));
}

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > UINT32_MAX) throw ParamError(std::string(what) + " does not fit the tensor format");
  return static_cast<std::uint32_t>(v);
}

}  // namespace

void save_tensors(const std::filesystem::path& path, const Workload& workload) {
  if (workload.heads.size() != workload.num_layers * workload.num_heads || workload.heads.empty()) {
    throw ShapeError("workload head count does not match its layer x head grid");
  }
  const std::size_t L = workload.heads.front().seq_len();
  const std::size_t d = workload.heads.front().head_dim();
  std::vector<char> buf;
  buf.reserve(kTensorHeaderBytes + workload.heads.size() * 3 * L * d * 4);
  buf.insert(buf.end(), std::begin(kTensorMagic), std::end(kTensorMagic));
  put_u32(buf, kTensorVersion);
  put_u32(buf, checked_u32(workload.num_layers, "layer count"));
  put_u32(buf, checked_u32(workload.num_heads, "head count"));
  put_u32(buf, checked_u32(L, "sequence length"));
  put_u32(buf, checked_u32(d, "head dim"));
  for (const HeadTensors& t : workload.heads) {
    if (t.seq_len() != L || t.head_dim() != d) {
      throw ShapeError("all heads must share one L x d shape");
    }
    put_matrix(buf, t.q());
    put_matrix(buf, t.k());
    put_matrix(buf, t.v());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

Workload load_tensors(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("failed reading " + path.string());

  if (buf.size() < 4 || !std::equal(std::begin(kTensorMagic), std::end(kTensorMagic), buf.begin())) {
    throw FormatError(0, path.string() + ": bad magic, expected \"RRTN\"");
  }
  if (buf.size() < kTensorHeaderBytes) {
    throw IoError(path.string() + ": truncated header (" + std::to_string(buf.size()) +
                  " of " + std::to_string(kTensorHeaderBytes) + " bytes)");
  }
  const std::uint32_t version = get_u32(buf, 4);
  if (version != kTensorVersion) {
    throw FormatError(4, path.string() + ": unsupported version " + std::to_string(version) +
                             ", expected " + std::to_string(kTensorVersion));
  }
  const std::array<const char*, 4> names = {"layers", "heads", "seq_len", "head_dim"};
  std::array<std::uint64_t, 4> dims{};
  for (std::size_t f = 0; f < 4; ++f) {
    dims[f] = get_u32(buf, 8 + 4 * f);
    if (dims[f] == 0) {
      throw FormatError(8 + 4 * f, path.string() + ": " + names[f] + " must be >= 1");
    }
  }
  const auto [layers, heads, L, d] = dims;
  const std::uint64_t expected = kTensorHeaderBytes + layers * heads * 3 * L * d * 4;
  if (buf.size() < expected) {
    throw IoError(path.string() + ": truncated payload (" + std::to_string(buf.size()) +
                  " bytes, header implies " + std::to_string(expected) + ")");
  }
  if (buf.size() > expected) {
    throw FormatError(expected, path.string() + ": " +
                                    std::to_string(buf.size() - expected) +
                                    " bytes beyond the header-implied size " +
                                    std::to_string(expected));
  }

  Workload w;
  w.num_layers = layers;
  w.num_heads = heads;
  w.heads.reserve(layers * heads);
  std::size_t offset = kTensorHeaderBytes;
  for (std::uint64_t h = 0; h < layers * heads; ++h) {
    Matrix q = get_matrix(buf, offset, L, d);
    Matrix k = get_matrix(buf, offset, L, d);
    Matrix v = get_matrix(buf, offset, L, d);
    w.heads.emplace_back(std::move(q), std::move(k), std::move(v));
  }
  return w;
}

}  // namespace sparsegrid
