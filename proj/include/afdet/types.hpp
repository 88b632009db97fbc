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
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

namespace afdet {

enum class ClassId : std::uint8_t { kVehicle = 0, kPedestrian = 1, kCyclist = 2 };

inline constexpr std::size_t kNumClasses = 3;
inline constexpr std::array<ClassId, kNumClasses> kAllClasses = {
    ClassId::kVehicle, ClassId::kPedestrian, ClassId::kCyclist};

inline std::size_t class_index(ClassId c) { return static_cast<std::size_t>(c); }

std::string_view class_name(ClassId c);
// Accepts "VEHICLE"/"PEDESTRIAN"/"CYCLIST" (case-insensitive); throws InputError otherwise.
ClassId parse_class(std::string_view name);
ClassId class_from_index(std::size_t i);

// Number of per-point features carried through the pipeline:
// x, y, z, clamped intensity, elongation, time lag.
inline constexpr std::size_t kPointDim = 6;

struct Point {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double intensity = 0.0;   // clamped
  double elongation = 0.0;
  double dt = 0.0;          // seconds behind the current frame

  std::array<double, kPointDim> features() const {
    return {x, y, z, intensity, elongation, dt};
  }
  friend bool operator==(const Point&, const Point&) = default;
};

using PointCloud = std::vector<Point>;

// Wraps an angle to [-pi, pi].
inline double wrap_angle(double a) {
  constexpr double kPi = std::numbers::pi;
  if (a >= -kPi && a <= kPi) return a;
  double r = std::remainder(a, 2.0 * kPi);
  if (r < -kPi) r += 2.0 * kPi;
  if (r > kPi) r -= 2.0 * kPi;
  return r;
}

// 7-DoF box. l extends along the heading (local x), w along local y.
struct Box3D {
  double cx = 0.0, cy = 0.0, cz = 0.0;
  double l = 1.0, w = 1.0, h = 1.0;
  double yaw = 0.0;
  ClassId cls = ClassId::kVehicle;

  friend bool operator==(const Box3D&, const Box3D&) = default;
};

bool is_valid(const Box3D& b);
// Rejects non-positive sizes and non-finite values; wraps yaw.
Box3D make_box(double cx, double cy, double cz, double l, double w, double h, double yaw,
               ClassId cls);

// Axis-aligned detection volume [min, max) per axis.
struct Range3 {
  std::array<double, 3> min{};
  std::array<double, 3> max{};

  bool contains(double x, double y, double z) const {
    return x >= min[0] && x < max[0] && y >= min[1] && y < max[1] && z >= min[2] && z < max[2];
  }
  bool contains(const Point& p) const { return contains(p.x, p.y, p.z); }
  bool contains_center(const Box3D& b) const { return contains(b.cx, b.cy, b.cz); }
};

}  // namespace afdet
