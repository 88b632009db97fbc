// Copyright 2026 The AFDet Pipeline Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "afdet/types.hpp"

namespace afdet {

using Cell = std::array<std::uint32_t, 3>;

// Detection volume quantized into cells. dims are derived from range / cell.
class VoxelGrid {
 public:
  VoxelGrid() = default;
  // Throws InputError unless every cell size is positive, min < max, and the
  // cell count times the cell size reconstructs the range within 1e-6 m.
  VoxelGrid(const Range3& range, const std::array<double, 3>& cell);

  const Range3& range() const { return range_; }
  const std::array<double, 3>& cell() const { return cell_; }
  const std::array<std::uint32_t, 3>& dims() const { return dims_; }
  std::uint64_t num_cells() const {
    return std::uint64_t{dims_[0]} * dims_[1] * dims_[2];
  }

 private:
  Range3 range_{};
  std::array<double, 3> cell_{1, 1, 1};
  std::array<std::uint32_t, 3> dims_{0, 0, 0};
};

// floor((coord - range_min) / cell) per axis; nullopt when any axis falls
// outside [0, dims).
std::optional<Cell> quantize(const Point& p, const VoxelGrid& grid);

// c_x + c_y * v_x + c_z * v_x * v_y. Throws InvariantError if the cell lies
// outside the grid.
std::uint64_t voxel_index(const Cell& cell, const VoxelGrid& grid);
Cell voxel_cell(std::uint64_t index, const VoxelGrid& grid);

struct SparseVoxels {
  std::size_t feature_dim = kPointDim;
  std::vector<Cell> coords;
  std::vector<double> features;  // coords.size() x feature_dim, row-major
  std::vector<std::uint32_t> counts;

  // Diagnostics for capped runs.
  std::uint64_t dropped_points = 0;
  std::uint64_t dropped_voxels = 0;
  std::uint64_t out_of_range_points = 0;

  std::size_t size() const { return coords.size(); }
  std::span<const double> feature(std::size_t i) const {
    return std::span<const double>(features).subspan(i * feature_dim, feature_dim);
  }
};

struct VoxelizeOptions {
  std::optional<std::uint32_t> max_points_per_voxel;
  std::optional<std::uint64_t> max_voxels;
  std::size_t threads = 1;
  // Dense accumulation buffers are used while feature_dim * num_cells stays
  // within this many doubles; beyond it a hash-keyed compact buffer is used.
  std::uint64_t dense_budget = std::uint64_t{1} << 24;
};

// Two-phase mean voxelization. Output voxels are ordered by first appearance
// in the input; with a point cap only the first m points of each voxel count,
// with a voxel cap only the first M distinct voxels are emitted.
SparseVoxels voxelize(std::span<const Point> points, const VoxelGrid& grid,
                      const VoxelizeOptions& options = {});

// Single-threaded reference with identical semantics.
SparseVoxels voxelize_serial(std::span<const Point> points, const VoxelGrid& grid,
                             std::optional<std::uint32_t> max_points_per_voxel = std::nullopt,
                             std::optional<std::uint64_t> max_voxels = std::nullopt);

// "VOXL" dump: magic, u64 voxel count, u8 feature dim, then per voxel
// u32 c_x, c_y, c_z, count and float32 x D.
std::vector<std::uint8_t> encode_voxl(const SparseVoxels& voxels);
SparseVoxels decode_voxl(std::span<const std::uint8_t> bytes);
void write_voxl(const std::filesystem::path& path, const SparseVoxels& voxels);
SparseVoxels read_voxl(const std::filesystem::path& path);

}  // namespace afdet
