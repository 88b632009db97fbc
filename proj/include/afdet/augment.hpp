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
#include <random>
#include <span>
#include <vector>

#include "afdet/types.hpp"

namespace afdet {

struct Scene {
  PointCloud points;
  std::vector<Box3D> boxes;

  friend bool operator==(const Scene&, const Scene&) = default;
};

struct GtEntry {
  Box3D box;              // recorded world pose
  PointCloud local_points;  // box frame: center at origin, yaw 0
};

struct GtDatabase {
  std::array<std::vector<GtEntry>, kNumClasses> entries;

  std::size_t size() const;
};

using ClassCounts = std::array<std::size_t, kNumClasses>;
inline constexpr ClassCounts kDefaultSampleCounts = {15, 10, 10};

GtDatabase build_gt_database(std::span<const Scene> scenes);

// Pastes up to `wanted` database objects per class at their recorded poses.
// A candidate is rejected when its BEV footprint overlaps (IoU > 0) any box
// already in the scene or placed earlier in this call.
Scene sample_gt(const GtDatabase& db, const Scene& scene, const ClassCounts& wanted,
                std::uint64_t seed);

struct GlobalTransformSpec {
  bool flip_x = false;  // x -> -x
  bool flip_y = false;  // y -> -y
  double rotation = 0.0;
  double scale = 1.0;
  std::array<double, 3> translation{0.0, 0.0, 0.0};
};

struct GlobalAugmentRanges {
  double flip_probability = 0.5;
  double max_rotation = std::numbers::pi / 4.0;
  double min_scale = 0.95;
  double max_scale = 1.05;
  double max_translation = 0.2;
};

GlobalTransformSpec draw_global_transform(std::mt19937_64& rng,
                                          const GlobalAugmentRanges& ranges = {});

// flip -> rotate about z -> scale about origin -> translate.
Scene apply_global_transform(const Scene& scene, const GlobalTransformSpec& spec);

struct InstanceNoiseSpec {
  double max_rotation = std::numbers::pi / 20.0;  // uniform half-width
  double location_std = 0.1;                       // per axis, meters
};

// Rotates each box and its interior points about the box center, then
// translates both by a Gaussian offset.
Scene instance_noise(const Scene& scene, const InstanceNoiseSpec& spec, std::uint64_t seed);

struct InstancePerturbation {
  double rotation = 0.0;
  std::array<double, 3> offset{0.0, 0.0, 0.0};
};

// Deterministic core of instance_noise with explicit per-box draws.
Scene apply_instance_perturbations(const Scene& scene,
                                   std::span<const InstancePerturbation> perturbations);

// Index JSON (class, box, point count, byte offset into the blob) plus one
// PCPD blob of concatenated local points.
void write_gt_database(const GtDatabase& db, const std::filesystem::path& index_path,
                       const std::filesystem::path& blob_path);
GtDatabase read_gt_database(const std::filesystem::path& index_path);

}  // namespace afdet
