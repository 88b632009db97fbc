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

#include "afdet/voxelizer.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "afdet/errors.hpp"
#include "afdet/io.hpp"
#include "afdet/parallel.hpp"

namespace afdet {

namespace {

constexpr std::uint64_t kOutOfRange = std::numeric_limits<std::uint64_t>::max();
constexpr std::uint64_t kDropped = kOutOfRange - 1;

}  // namespace

VoxelGrid::VoxelGrid(const Range3& range, const std::array<double, 3>& cell)
    : range_(range), cell_(cell) {
  for (int a = 0; a < 3; ++a) {
    if (!(cell[a] > 0.0) || !std::isfinite(cell[a]))
      throw InputError("voxel cell sizes must be positive");
    if (!(range.min[a] < range.max[a])) throw InputError("voxel grid range needs min < max");
    const double extent = range.max[a] - range.min[a];
    const double n = std::round(extent / cell[a]);
    if (n < 1.0 || n > std::numeric_limits<std::uint32_t>::max())
      throw InputError("voxel grid dimension out of range");
    if (std::abs(n * cell[a] - extent) > 1e-6)
      throw InputError("voxel grid range is not a whole number of cells");
    dims_[a] = static_cast<std::uint32_t>(n);
  }
}

std::optional<Cell> quantize(const Point& p, const VoxelGrid& grid) {
  const std::array<double, 3> coord = {p.x, p.y, p.z};
  Cell c{};
  for (int a = 0; a < 3; ++a) {
    const double q = std::floor((coord[a] - grid.range().min[a]) / grid.cell()[a]);
    if (!(q >= 0.0) || q >= static_cast<double>(grid.dims()[a])) return std::nullopt;
    c[a] = static_cast<std::uint32_t>(q);
  }
  return c;
}

std::uint64_t voxel_index(const Cell& cell, const VoxelGrid& grid) {
  const auto& d = grid.dims();
  if (cell[0] >= d[0] || cell[1] >= d[1] || cell[2] >= d[2])
    throw InvariantError("voxel_index: cell outside grid dims");
  return std::uint64_t{cell[0]} + std::uint64_t{cell[1]} * d[0] +
         std::uint64_t{cell[2]} * d[0] * d[1];
}

Cell voxel_cell(std::uint64_t index, const VoxelGrid& grid) {
  if (index >= grid.num_cells()) throw InvariantError("voxel_cell: index outside grid");
  const auto& d = grid.dims();
  const std::uint64_t plane = std::uint64_t{d[0]} * d[1];
  return {static_cast<std::uint32_t>(index % d[0]),
          static_cast<std::uint32_t>((index % plane) / d[0]),
          static_cast<std::uint32_t>(index / plane)};
}

namespace {

std::uint64_t point_index(const Point& p, const VoxelGrid& grid) {
  const auto c = quantize(p, grid);
  return c ? voxel_index(*c, grid) : kOutOfRange;
}

void add_atomic(double& target, double value) {
  std::atomic_ref<double>(target).fetch_add(value, std::memory_order_relaxed);
}

void add_atomic(std::uint32_t& target, std::uint32_t value) {
  std::atomic_ref<std::uint32_t>(target).fetch_add(value, std::memory_order_relaxed);
}

}  // namespace

SparseVoxels voxelize(std::span<const Point> points, const VoxelGrid& grid,
                      const VoxelizeOptions& options) {
  if (options.max_points_per_voxel && *options.max_points_per_voxel == 0)
    throw InputError("max_points_per_voxel must be positive");
  if (options.max_voxels && *options.max_voxels == 0)
    throw InputError("max_voxels must be positive");

  constexpr std::size_t kDim = kPointDim;
  const std::size_t threads = resolve_threads(options.threads);
  const std::size_t n = points.size();
  const bool capped = options.max_points_per_voxel || options.max_voxels;
  const bool dense = grid.num_cells() * kDim <= options.dense_budget;

  SparseVoxels out;
  out.feature_dim = kDim;

  // Phase A: per-point voxel index list, plus atomic accumulation into the
  // dense buffers when no cap can reject a point.
  std::vector<std::uint64_t> point_voxel(n);
  std::vector<double> dense_sum;
  std::vector<std::uint32_t> dense_count;
  const bool accumulate_dense = dense && !capped;
  if (accumulate_dense) {
    dense_sum.assign(grid.num_cells() * kDim, 0.0);
    dense_count.assign(grid.num_cells(), 0);
  }
  parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const std::uint64_t iv = point_index(points[i], grid);
      point_voxel[i] = iv;
      if (accumulate_dense && iv != kOutOfRange) {
        const auto f = points[i].features();
        for (std::size_t d = 0; d < kDim; ++d) add_atomic(dense_sum[iv * kDim + d], f[d]);
        add_atomic(dense_count[iv], 1u);
      }
    }
  });

  // Deduplicate in first-appearance order. When capping or running without
  // dense buffers, each surviving point is relabelled with its compact slot.
  std::vector<std::uint64_t> unique;
  std::unordered_map<std::uint64_t, std::uint64_t> slot_of;
  std::vector<std::uint32_t> accepted;
  std::vector<std::uint8_t> seen;
  if (accumulate_dense) seen.assign(grid.num_cells(), 0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t iv = point_voxel[i];
    if (iv == kOutOfRange) {
      ++out.out_of_range_points;
      continue;
    }
    if (accumulate_dense) {
      if (!seen[iv]) {
        seen[iv] = 1;
        unique.push_back(iv);
      }
      continue;
    }
    auto it = slot_of.find(iv);
    if (it == slot_of.end()) {
      if (options.max_voxels && unique.size() >= *options.max_voxels) {
        ++out.dropped_points;
        slot_of.emplace(iv, kDropped);
        ++out.dropped_voxels;
        point_voxel[i] = kDropped;
        continue;
      }
      it = slot_of.emplace(iv, unique.size()).first;
      unique.push_back(iv);
      accepted.push_back(0);
    }
    const std::uint64_t slot = it->second;
    if (slot == kDropped) {
      ++out.dropped_points;
      point_voxel[i] = kDropped;
      continue;
    }
    if (options.max_points_per_voxel && accepted[slot] >= *options.max_points_per_voxel) {
      ++out.dropped_points;
      point_voxel[i] = kDropped;
      continue;
    }
    ++accepted[slot];
    point_voxel[i] = slot;
  }

  const std::size_t m = unique.size();
  out.coords.resize(m);
  out.counts.resize(m);
  out.features.assign(m * kDim, 0.0);

  if (accumulate_dense) {
    // Phase B: gather dense sums for the unique indices and divide.
    parallel_for(m, threads, [&](std::size_t begin, std::size_t end) {
      for (std::size_t v = begin; v < end; ++v) {
        const std::uint64_t iv = unique[v];
        const std::uint32_t cnt = dense_count[iv];
        out.coords[v] = voxel_cell(iv, grid);
        out.counts[v] = cnt;
        for (std::size_t d = 0; d < kDim; ++d)
          out.features[v * kDim + d] = dense_sum[iv * kDim + d] / cnt;
      }
    });
    return out;
  }

  // Compact accumulation keyed by slot.
  parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const std::uint64_t slot = point_voxel[i];
      if (slot >= m) continue;
      const auto f = points[i].features();
      for (std::size_t d = 0; d < kDim; ++d) add_atomic(out.features[slot * kDim + d], f[d]);
      add_atomic(out.counts[slot], 1u);
    }
  });
  parallel_for(m, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t v = begin; v < end; ++v) {
      out.coords[v] = voxel_cell(unique[v], grid);
      for (std::size_t d = 0; d < kDim; ++d) out.features[v * kDim + d] /= out.counts[v];
    }
  });
  return out;
}

SparseVoxels voxelize_serial(std::span<const Point> points, const VoxelGrid& grid,
                             std::optional<std::uint32_t> max_points_per_voxel,
                             std::optional<std::uint64_t> max_voxels) {
  VoxelizeOptions options;
  options.max_points_per_voxel = max_points_per_voxel;
  options.max_voxels = max_voxels;
  options.threads = 1;
  return voxelize(points, grid, options);
}

std::vector<std::uint8_t> encode_voxl(const SparseVoxels& voxels) {
  ByteWriter w;
  w.magic("VOXL");
  w.put<std::uint64_t>(voxels.size());
  w.put<std::uint8_t>(static_cast<std::uint8_t>(voxels.feature_dim));
  for (std::size_t i = 0; i < voxels.size(); ++i) {
    for (std::uint32_t c : voxels.coords[i]) w.put<std::uint32_t>(c);
    w.put<std::uint32_t>(voxels.counts[i]);
    for (double f : voxels.feature(i)) w.put<float>(static_cast<float>(f));
  }
  return w.take();
}

SparseVoxels decode_voxl(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "VOXL");
  r.expect_magic("VOXL");
  const auto count = r.get<std::uint64_t>();
  const auto dim = r.get<std::uint8_t>();
  if (dim == 0) throw InputError("VOXL: feature dim must be positive");
  if (count > r.remaining() / (4 * sizeof(std::uint32_t) + dim * sizeof(float)))
    throw InputError("VOXL: truncated input");
  SparseVoxels v;
  v.feature_dim = dim;
  v.coords.resize(count);
  v.counts.resize(count);
  v.features.resize(count * dim);
  for (std::uint64_t i = 0; i < count; ++i) {
    for (auto& c : v.coords[i]) c = r.get<std::uint32_t>();
    v.counts[i] = r.get<std::uint32_t>();
    for (std::size_t d = 0; d < dim; ++d) v.features[i * dim + d] = r.get<float>();
  }
  r.expect_end();
  return v;
}

void write_voxl(const std::filesystem::path& path, const SparseVoxels& voxels) {
  write_file_bytes(path, encode_voxl(voxels));
}

SparseVoxels read_voxl(const std::filesystem::path& path) {
  return decode_voxl(read_file_bytes(path));
}

}  // namespace afdet
