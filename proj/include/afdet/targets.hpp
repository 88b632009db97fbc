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

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "afdet/feature_map.hpp"
#include "afdet/types.hpp"
#include "afdet/voxelizer.hpp"

namespace afdet {

struct HeadConfig {
  std::uint32_t out_stride = 8;
  std::size_t num_classes = kNumClasses;
  int min_radius_center = 2;
  int min_radius_keypoint = 1;
  double gaussian_overlap = 0.1;
  std::size_t max_objects = 500;

  void validate() const;
};

// Output-plane geometry derived from a voxel grid and a stride.
struct OutputGrid {
  std::size_t width = 0;   // u, along x
  std::size_t height = 0;  // v, along y
  double cell_x = 0.0;
  double cell_y = 0.0;
  double min_x = 0.0;
  double min_y = 0.0;
};

OutputGrid output_grid(const VoxelGrid& grid, const HeadConfig& cfg);

struct ObjectIndex {
  std::uint32_t u = 0;
  std::uint32_t v = 0;
  std::size_t box_id = 0;
};

struct TargetDiagnostics {
  std::size_t out_of_range = 0;
  std::size_t over_limit = 0;
  std::size_t center_collisions = 0;
};

// Per-cell targets for the seven sub-heads. The same layout doubles as the
// head-output container consumed by decode_boxes.
struct TargetSet {
  FeatureMap heatmap;           // C x H x W
  FeatureMap keypoint_heatmap;  // C x H x W
  FeatureMap offset;            // 2 x H x W, fractional cell residual
  FeatureMap z;                 // 1 x H x W, meters
  FeatureMap size;              // 3 x H x W, log(l), log(w), log(h)
  FeatureMap yaw;               // 2 x H x W, sin, cos
  FeatureMap iou;               // 1 x H x W, encoded IoU
  std::vector<std::uint8_t> reg_mask;  // H x W
  std::vector<ObjectIndex> obj_index;
  TargetDiagnostics diagnostics;

  TargetSet() = default;
  TargetSet(std::size_t num_classes, std::size_t height, std::size_t width);

  std::size_t num_classes() const { return heatmap.channels(); }
  std::size_t height() const { return heatmap.height(); }
  std::size_t width() const { return heatmap.width(); }
};

// Minimum of the three overlap-preserving radii from the corner-heatmap
// construction (both corners shifted, box shrunk, box grown), in cells.
double gaussian_radius_raw(double len_cells, double wid_cells, double overlap);

// floor(raw radius) clamped below at min_radius.
int gaussian_radius(double len_cells, double wid_cells, double overlap, int min_radius);
// Keypoint variant: floor(raw radius / 2) clamped below at min_radius.
int keypoint_radius(double len_cells, double wid_cells, double overlap, int min_radius);

// Max-merges exp(-(du^2 + dv^2) / (2 sigma^2)), sigma = (2r + 1) / 6, over the
// (2r + 1)^2 window clipped to the plane.
void draw_gaussian(std::span<double> plane, std::size_t height, std::size_t width,
                   std::size_t u, std::size_t v, int radius);

TargetSet encode_targets(std::span<const Box3D> boxes, const VoxelGrid& grid,
                         const HeadConfig& cfg);

// 2 * (iou - 0.5); throws InputError outside [0, 1].
double encode_iou_target(double iou);
double decode_iou_target(double encoded);

// Encoded IoU target for a (predicted, ground-truth) pair using yaw-free 3D IoU.
double iou_regression_target(const Box3D& predicted, const Box3D& ground_truth);

// "TGTS" dump: magic, u32 C, u32 H, u32 W, float32 planes in the order
// heatmap (C), keypoint heatmap (C), offset (2), z (1), size (3), yaw (2),
// iou (1), then the u8 regression mask plane.
std::vector<std::uint8_t> encode_tgts(const TargetSet& t);
TargetSet decode_tgts(std::span<const std::uint8_t> bytes);
void write_tgts(const std::filesystem::path& path, const TargetSet& t);
TargetSet read_tgts(const std::filesystem::path& path);

}  // namespace afdet
