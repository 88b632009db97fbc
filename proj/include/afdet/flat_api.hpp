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

// Array-in/array-out surface consumed by scripting-language bindings. Inputs
// are caller-owned views; outputs are freshly allocated vectors. Every
// function delegates to the core library and raises its exceptions unchanged.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace afdet::flat {

struct GridParams {
  std::array<double, 3> range_min{};
  std::array<double, 3> range_max{};
  std::array<double, 3> cell{};
};

struct Voxels {
  std::vector<std::int32_t> coords;  // M x 3
  std::vector<float> features;       // M x 6
  std::vector<std::int32_t> counts;  // M
};

// `cloud` is N x 6 float32 in PCPD point layout.
Voxels voxelize(std::span<const float> cloud, const GridParams& grid,
                std::optional<std::uint32_t> max_points_per_voxel = std::nullopt,
                std::optional<std::uint64_t> max_voxels = std::nullopt, std::size_t threads = 1);

// boxes are N x 7 (cx, cy, cz, l, w, h, yaw).
double iou_bev(std::span<const float> box_a, std::span<const float> box_b);
double iou_3d(std::span<const float> box_a, std::span<const float> box_b);
double rescore(double score, double iou_pred, double alpha);

// Kept indices into the input, confidence descending.
std::vector<std::int64_t> nms(std::span<const float> boxes, std::span<const float> scores,
                              std::span<const std::int32_t> classes,
                              const std::array<double, 3>& thresholds);

struct EvalInput {
  std::vector<std::int32_t> frame;  // frame id per row; empty means a single frame
  std::vector<float> boxes;         // N x 7
  std::vector<std::int32_t> classes;
  std::vector<float> scores;        // detections only
};

// Keys: "<CLASS>/ap", "<CLASS>/aph", "mean_ap", "mean_aph".
std::map<std::string, double> evaluate(const EvalInput& dets, const EvalInput& gts,
                                       const std::array<double, 3>& iou_thresholds,
                                       bool axis_aligned_3d = false);

}  // namespace afdet::flat
