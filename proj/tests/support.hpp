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

// Random generators and brute-force reference implementations shared by the
// unit tests and the acceptance runner. The oracles deliberately avoid the
// library code paths they are used to check.
#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "afdet/evaluator.hpp"
#include "afdet/postprocess.hpp"
#include "afdet/types.hpp"
#include "afdet/voxelizer.hpp"

namespace afdet::testing {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi);
bool rel_close(double a, double b, double rel, double abs_floor = 1e-12);

Box3D random_box(Rng& rng, double center_extent = 5.0, double min_size = 0.3, double max_size = 5.0);
Box3D random_box_of(Rng& rng, ClassId cls, double center_extent = 5.0);

// Grid whose range is an exact multiple of its random cell sizes.
VoxelGrid random_grid(Rng& rng);
// Mostly in-range points with a few strays outside the grid.
PointCloud random_cloud(Rng& rng, std::size_t n, const VoxelGrid& grid);

// Stratified sampling over the smaller box with side x side samples.
double mc_iou_bev(const Box3D& a, const Box3D& b, int side = 1000);

struct OracleVoxels {
  std::vector<std::array<std::uint32_t, 3>> coords;  // first-appearance order
  std::vector<std::uint32_t> counts;
  std::vector<std::array<double, kPointDim>> features;
};
OracleVoxels oracle_voxelize(std::span<const Point> points, const VoxelGrid& grid);

// Full pairwise IoU table, then the textbook greedy loop.
std::vector<std::size_t> oracle_nms(std::span<const Detection> dets, const PerClass& thresholds);

// Largest r satisfying each corner-case overlap bound, found by bisection.
double oracle_gaussian_radius(double h, double w, double overlap);

// Reference AP with the 101-point interpolation written directly from the
// precision/recall curve. `weights` are per-detection TP weights (1 for AP).
double oracle_ap(std::vector<double> confidences, std::vector<double> tp_weights,
                 std::vector<bool> tp, std::size_t num_gt, std::size_t levels = 101);

// Worst coordinate of |analytic - central difference| / max(|analytic|, |numeric|, floor).
double max_fd_rel_error(const std::function<double(std::span<const double>)>& f, std::vector<double> x,
                        std::span<const double> analytic, double step = 1e-5, double floor = 1e-6);

Detection make_det(const Box3D& box, double confidence);

}  // namespace afdet::testing
