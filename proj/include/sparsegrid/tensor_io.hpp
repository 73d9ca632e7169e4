// Copyright 2026 The SparseGrid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>

#include "sparsegrid/workload.hpp"

namespace sparsegrid {

// Little-endian layout:
//   "RRTN" | u32 version (1) | u32 layers | u32 heads | u32 L | u32 d
//   then per (layer, head), layer-major: Q, K, V as L*d row-major f32.
// The file size must equal the header-implied size exactly.
inline constexpr char kTensorMagic[4] = {'R', 'R', 'T', 'N'};
inline constexpr std::uint32_t kTensorVersion = 1;
inline constexpr std::size_t kTensorHeaderBytes = 24;

/// Throws IoError when the file cannot be written.
void save_tensors(const std::filesystem::path& path, const Workload& workload);

/// Throws IoError for unreadable or truncated files and FormatError for a bad
/// magic, version, zero dimension or trailing bytes.
Workload load_tensors(const std::filesystem::path& path);

}  // namespace sparsegrid
